//! File formats and command implementations for the `githeight` binary.
//!
//! Every command returns an [`Outcome`] holding the exit code and the text
//! for stdout, so the commands can be driven in-process by tests.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context as _;
use githeight_core::chow::chow_form_of_points;
use githeight_core::decompose::decompose;
use githeight_core::duality::{dual_chow_form, dual_constant, hyperplane_height};
use githeight_core::height::{global_height, positivity_suite, FamilySpec, HeightEstimate, HeightOptions};
use githeight_core::linalg::to_f64;
use githeight_core::nonarch::Place;
use githeight_core::section::SectionChoice;
use githeight_core::{check_stability, Configuration, Error, Point, StabilityStatus, SubspaceWitness};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<SectionChoice>,
}

/// On-disk configuration: `{"ambient": N, "points": [{"vector": ["p/q", ...], "multiplicity": "p/q"}], "options": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ambient: usize,
    pub points: Vec<Point>,
    #[serde(default)]
    pub options: FileOptions,
}

impl ConfigFile {
    pub fn configuration(&self) -> githeight_core::Result<Configuration> {
        Configuration::new(self.ambient, self.points.iter().map(|p| (p.vector.clone(), p.multiplicity.clone())))
    }

    pub fn from_configuration(c: &Configuration) -> Self {
        Self { ambient: c.ambient(), points: c.points().to_vec(), options: FileOptions::default() }
    }
}

/// Parses JSON, naming the offending field on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> anyhow::Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("field `{}`: {}", path, e.into_inner())
    })
}

pub fn read_config_file(path: &Path) -> anyhow::Result<(ConfigFile, Configuration)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ConfigFile = parse_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let config = file.configuration().with_context(|| format!("invalid configuration in {}", path.display()))?;
    Ok((file, config))
}

/// Command-line overrides; unset values fall back to the file, then to defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Flags {
    pub mc_samples: Option<u64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub depth: Option<u32>,
    pub json: bool,
}

impl Flags {
    pub fn options(&self, file: &FileOptions) -> HeightOptions {
        let d = HeightOptions::default();
        HeightOptions {
            tol: self.tol.or(file.tol).unwrap_or(d.tol),
            max_iter: d.max_iter,
            search_depth: self.depth.or(file.search_depth).unwrap_or(d.search_depth),
            section: file.section.unwrap_or(d.section),
            mc_samples: self.mc_samples.or(file.mc_samples).unwrap_or(d.mc_samples),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { code: EXIT_OK, stdout }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn witness_line(w: &SubspaceWitness) -> String {
    let basis: Vec<String> = w.basis.iter().map(|v| format!("({})", v.entries().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))).collect();
    format!("witness: dim {} mass {} basis {}", w.dim, w.mass, basis.join(" "))
}

/// Unstable inputs exit with code 2 and print the violating subspace.
fn unstable(flags: &Flags, witness: &SubspaceWitness) -> anyhow::Result<Outcome> {
    let stdout = if flags.json {
        to_json(&serde_json::json!({ "status": StabilityStatus::Unstable, "witness": witness }))?
    } else {
        format!("Unstable\n{}\n", witness_line(witness))
    };
    Ok(Outcome { code: EXIT_UNSTABLE, stdout })
}

pub fn cmd_stability(path: &Path, flags: &Flags) -> anyhow::Result<Outcome> {
    let (_, config) = read_config_file(path)?;
    let verdict = check_stability(&config)?;
    let code = if verdict.status.is_semistable() { EXIT_OK } else { EXIT_UNSTABLE };
    let stdout = if flags.json {
        to_json(&verdict)?
    } else {
        let mut s = format!("{:?}\n", verdict.status);
        if let Some(w) = &verdict.witness {
            s += &witness_line(w);
            s.push('\n');
        }
        s
    };
    Ok(Outcome { code, stdout })
}

fn place_name(p: Place) -> String {
    match p {
        Place::Archimedean => "inf".into(),
        Place::Prime(p) => p.to_string(),
    }
}

fn height_table(est: &HeightEstimate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>14} {:>14}  certificate", "place", "lower", "upper");
    for l in &est.per_place {
        let _ = writeln!(s, "{:<8} {:>14.9} {:>14.9}  {:?}", place_name(l.place), l.lower, l.upper, l.certificate);
    }
    let _ = writeln!(s, "total    [{:.9}, {:.9}]", est.total.lower, est.total.upper);
    if let Some(m) = &est.stable_margin {
        let _ = writeln!(s, "positive lower bound via witness split: {:.9} (witness {:?}, removed {}, gap {:.9})", m.margin, m.witness, m.removed, m.gap);
    }
    let _ = writeln!(s, "digest {}", est.config_digest);
    let _ = writeln!(s, "seed {} tol {:e} depth {}", est.options.seed, est.options.tol, est.options.search_depth);
    s
}

pub fn cmd_height(path: &Path, flags: &Flags) -> anyhow::Result<Outcome> {
    let (file, config) = read_config_file(path)?;
    let options = flags.options(&file.options);
    match global_height(&config, &options) {
        Ok(est) => Ok(Outcome::ok(if flags.json { to_json(&est)? } else { height_table(&est) })),
        Err(Error::Unstable { witness }) => unstable(flags, &witness),
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_decompose(path: &Path, flags: &Flags) -> anyhow::Result<Outcome> {
    let (_, config) = read_config_file(path)?;
    match decompose(&config) {
        Ok(dec) => {
            if flags.json {
                return Ok(Outcome::ok(to_json(&dec)?));
            }
            let mut s = format!("{} basis term(s)\n", dec.terms.len());
            for t in &dec.terms {
                let _ = writeln!(s, "{} * {:?}", t.coefficient, t.basis);
            }
            Ok(Outcome::ok(s))
        }
        Err(Error::Unstable { witness }) => unstable(flags, &witness),
        Err(e) => Err(e.into()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    /// Hyperplane form; absent for fractional multiplicities.
    pub dual_form: Option<githeight_core::chow::ChowForm>,
    pub height: HeightEstimate,
}

pub fn cmd_dual(path: &Path, flags: &Flags) -> anyhow::Result<Outcome> {
    let (file, config) = read_config_file(path)?;
    let options = flags.options(&file.options);
    let height = match hyperplane_height(&config, &options) {
        Ok(h) => h,
        Err(Error::Unstable { witness }) => return unstable(flags, &witness),
        Err(e) => return Err(e.into()),
    };
    let dual_form = if config.has_integer_multiplicities() { Some(dual_chow_form(&chow_form_of_points(&config)?)?) } else { None };
    let report = DualReport { dual_form, height };
    if flags.json {
        return Ok(Outcome::ok(to_json(&report)?));
    }
    let mut s = String::new();
    if let Some(f) = &report.dual_form {
        let _ = writeln!(s, "dual form: {} blocks of {} variables, degree {}, {} terms", f.blocks, f.vars, f.degree, f.coeffs.len());
    }
    s += &height_table(&report.height);
    Ok(Outcome::ok(s))
}

pub fn cmd_dual_constant(n: usize, flags: &Flags) -> anyhow::Result<Outcome> {
    let options = flags.options(&FileOptions::default());
    let c = dual_constant(n, options.mc_samples, options.seed)?;
    if flags.json {
        return Ok(Outcome::ok(to_json(&c)?));
    }
    Ok(Outcome::ok(format!(
        "N {}\nclosed form {} = {:.9}\nmc {:.9} +- {:.9} ({} samples, seed {})\n",
        c.n,
        c.closed_form,
        to_f64(&c.closed_form),
        c.mc_check.mean,
        c.mc_check.stderr,
        c.mc_check.samples,
        c.mc_check.seed
    )))
}

pub fn cmd_verify(suite: &str, flags: &Flags) -> anyhow::Result<Outcome> {
    let mut family = FamilySpec::by_name(suite).with_context(|| format!("unknown suite {suite:?}; expected default or extended"))?;
    let options = flags.options(&FileOptions::default());
    if let Some(seed) = flags.seed {
        family.seed = seed;
    }
    let report = positivity_suite(&family, &options)?;
    let code = if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED };
    let stdout = if flags.json {
        to_json(&report)?
    } else {
        let mut s = format!("suite {} seed {}: {} members, {} unstable skipped\n", report.family, report.seed, report.members, report.unstable);
        for t in &report.theorems {
            let _ = writeln!(s, "{} {} ({} checked)", if t.pass { "PASS" } else { "FAIL" }, t.name, t.checked);
            for f in &t.failures {
                let _ = writeln!(s, "  counterexample {}: {}", f.config, f.detail);
            }
        }
        for m in &report.stable_margins {
            let _ = writeln!(s, "stable {} margin {:.3e} lower {:.3e}", &m.config_digest[..12], m.margin, m.lower);
        }
        let _ = writeln!(s, "{}", if report.pass { "ALL PASS" } else { "FAILED" });
        s
    };
    Ok(Outcome { code, stdout })
}
