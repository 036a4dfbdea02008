//! Experiment driver: flat `key = value` configuration, dispatch to the
//! owning module, and a report whose summary is recomputable from its rows.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counterexample::{default_zeta_samples, inflation_experiment, AlphaKind, QuadSpec};
use crate::ensemble::{sample_field, Profile};
use crate::error::{Error, Result};
use crate::function_spaces::{besov_norm, chemin_bound, chemin_decay_check, embedding_constants, embedding_row, BesovParams};
use crate::littlewood_paley::Psi;
use crate::ns_bilinear::{chi_partition, mu_symbols, nu_symbols, picard_iterate, LinearForm, MuKind, NuKind, T1Operator, T2Operator};
use crate::pseudo_product::{boundedness_ratio, gaussian_symbol, median, BilinearOperator, NormSelector, Symbol};
use crate::report::{Cell, ExperimentReport};
use crate::spectral::{lp_norm, make_grid, Frequency, GridSpec, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PartitionCheck,
    Besov,
    Embeddings,
    Boundedness,
    SymbolCheck,
    Iterate,
    Inflation,
    Chemin,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::PartitionCheck,
        ExperimentKind::Besov,
        ExperimentKind::Embeddings,
        ExperimentKind::Boundedness,
        ExperimentKind::SymbolCheck,
        ExperimentKind::Iterate,
        ExperimentKind::Inflation,
        ExperimentKind::Chemin,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::PartitionCheck => "partition-check",
            ExperimentKind::Besov => "besov",
            ExperimentKind::Embeddings => "embeddings",
            ExperimentKind::Boundedness => "boundedness",
            ExperimentKind::SymbolCheck => "symbol-check",
            ExperimentKind::Iterate => "iterate",
            ExperimentKind::Inflation => "inflation",
            ExperimentKind::Chemin => "chemin",
        }
    }

    /// Experiment-specific option keys.
    pub fn option_keys(&self) -> &'static [&'static str] {
        match self {
            ExperimentKind::PartitionCheck => &["samples", "r_lo", "r_hi", "psi_eps"],
            ExperimentKind::Besov => &["s", "p", "q"],
            ExperimentKind::Embeddings => &[],
            ExperimentKind::Boundedness => &["operator", "in1", "in2", "out", "profile2"],
            ExperimentKind::SymbolCheck => &["samples"],
            ExperimentKind::Iterate => &["n", "t", "steps", "input", "output_field"],
            ExperimentKind::Inflation => &["alpha", "ns", "zeta_eps", "nodes"],
            ExperimentKind::Chemin => &["j_lo", "j_hi", "t"],
        }
    }

    /// Chemin needs `Δ_5` inside the half-Nyquist box, so `|ξ| ≥ 24` must fit.
    fn default_points(&self) -> usize {
        match self {
            ExperimentKind::Chemin => 128,
            _ => 64,
        }
    }

    fn default_profile(&self) -> Profile {
        match self {
            ExperimentKind::Iterate => Profile::DivfreeVector,
            _ => Profile::FlatBinf,
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const BASE_KEYS: [&str; 8] = ["experiment", "dim", "points", "period", "ensemble_size", "seed", "profile", "output"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    pub points: usize,
    pub period: f64,
    pub ensemble_size: usize,
    pub seed: u64,
    /// `None` selects the experiment's default profile.
    pub profile: Option<Profile>,
    pub options: BTreeMap<String, String>,
    /// Output prefix; `<prefix>.csv` and `<prefix>.json` are written.
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            dim: 2,
            points: experiment.default_points(),
            period: 2.0 * PI,
            ensemble_size: 20,
            seed: 1,
            profile: None,
            options: BTreeMap::new(),
            output: None,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&parse_pairs(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let kind: ExperimentKind = map
            .get("experiment")
            .ok_or_else(|| Error::Config("missing key 'experiment'".into()))?
            .parse()?;
        let mut cfg = Self::new(kind);
        for (k, v) in map {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets one key; used for both file values and flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key} = '{value}': {e}"));
        match key {
            "experiment" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.experiment {
                    return Err(Error::Config(format!("experiment '{kind}' does not match '{}'", self.experiment)));
                }
            }
            "dim" => self.dim = value.parse().map_err(|e| bad(&e))?,
            "points" => self.points = value.parse().map_err(|e| bad(&e))?,
            "period" => self.period = parse_period(value).map_err(|e| bad(&e))?,
            "ensemble_size" => self.ensemble_size = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "profile" => self.profile = Some(value.parse()?),
            "output" => self.output = Some(PathBuf::from(value)),
            other => {
                if !self.experiment.option_keys().contains(&other) {
                    return Err(Error::Config(format!("unknown key '{other}' for {}", self.experiment)));
                }
                self.options.insert(other.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut map = self.options.clone();
        map.insert("experiment".into(), self.experiment.to_string());
        map.insert("dim".into(), self.dim.to_string());
        map.insert("points".into(), self.points.to_string());
        map.insert("period".into(), format!("{:e}", self.period));
        map.insert("ensemble_size".into(), self.ensemble_size.to_string());
        map.insert("seed".into(), self.seed.to_string());
        if let Some(p) = self.profile {
            map.insert("profile".into(), p.as_str().into());
        }
        if let Some(o) = &self.output {
            map.insert("output".into(), o.display().to_string());
        }
        map
    }

    pub fn to_text(&self) -> String {
        let map = self.to_map();
        let mut out = String::new();
        for k in BASE_KEYS.iter().filter(|k| map.contains_key(**k)) {
            out.push_str(&format!("{k} = {}\n", map[*k]));
        }
        for (k, v) in map.iter().filter(|(k, _)| !BASE_KEYS.contains(&k.as_str())) {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn grid(&self) -> Result<GridSpec> {
        make_grid(self.dim, self.points, self.period)
    }

    pub fn profile(&self) -> Profile {
        self.profile.unwrap_or_else(|| self.experiment.default_profile())
    }

    fn opt<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.options.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::Config(format!("{key} = '{v}': {e}"))),
        }
    }

    fn opt_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.options.get(key) {
            None => Ok(default),
            Some(v) => parse_real(v).map_err(|e| Error::Config(format!("{key} = '{v}': {e}"))),
        }
    }

    fn opt_str<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.options.get(key).map(String::as_str).unwrap_or(default)
    }
}

/// `key = value` lines; `#` starts a comment; later keys win.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Real number, accepting `inf`.
fn parse_real(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|e: std::num::ParseFloatError| e.to_string()),
    }
}

/// A number or a multiple of `pi` such as `2pi`.
fn parse_period(s: &str) -> std::result::Result<f64, String> {
    if let Some(m) = s.strip_suffix("pi") {
        let m = if m.is_empty() { 1.0 } else { m.trim_end_matches('*').parse().map_err(|e: std::num::ParseFloatError| e.to_string())? };
        return Ok(m * PI);
    }
    s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())
}

/// `l2`, `linf`, `lp:P`, `besov:S:P:Q` or `bmo`.
pub fn parse_norm(s: &str) -> Result<NormSelector> {
    let parts: Vec<&str> = s.split(':').collect();
    let real = |v: &str| parse_real(v).map_err(|e| Error::Config(format!("norm '{s}': {e}")));
    match parts.as_slice() {
        ["l2"] => Ok(NormSelector::Lp { p: 2.0 }),
        ["linf"] => Ok(NormSelector::Lp { p: f64::INFINITY }),
        ["lp", p] => Ok(NormSelector::Lp { p: real(p)? }),
        ["besov", a, b, c] => Ok(NormSelector::Besov { s: real(a)?, p: real(b)?, q: real(c)? }),
        ["bmo"] => Ok(NormSelector::Bmo),
        _ => Err(Error::Config(format!("unknown norm '{s}'"))),
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|v| v.trim().parse().map_err(|e| Error::Config(format!("list '{s}': {e}"))))
        .collect()
}

fn e(i: usize) -> LinearForm {
    let mut c = [0.0; 3];
    c[i] = 1.0;
    LinearForm(c)
}

/// Named bilinear operator for the boundedness harness.
pub fn operator_by_name(name: &str) -> Result<Box<dyn BilinearOperator>> {
    Ok(match name {
        "mu" => Box::new(mu_symbols(MuKind::Mu, e(0), e(1))),
        "nu" => Box::new(nu_symbols(NuKind::Nu, e(0), e(1))),
        "gaussian" => Box::new(gaussian_symbol()),
        "t1" => Box::new(T1Operator),
        "t2" => Box::new(T2Operator),
        other => return Err(Error::Config(format!("unknown operator '{other}'"))),
    })
}

/// Runs the experiment and writes `<output>.csv` and `<output>.json` when an
/// output prefix is configured.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = match config.experiment {
        ExperimentKind::PartitionCheck => partition_check(config)?,
        ExperimentKind::Besov => besov(config)?,
        ExperimentKind::Embeddings => embeddings(config)?,
        ExperimentKind::Boundedness => boundedness(config)?,
        ExperimentKind::SymbolCheck => symbol_check(config)?,
        ExperimentKind::Iterate => iterate(config)?,
        ExperimentKind::Inflation => inflation(config)?,
        ExperimentKind::Chemin => chemin(config)?,
    };
    if let Some(prefix) = &config.output {
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        report.write_csv(&prefix.with_extension("csv"))?;
        report.write_json(&prefix.with_extension("json"))?;
    }
    Ok(report)
}

/// Summary statistics of a report, recomputed from its rows.
pub fn summarize(report: &ExperimentReport) -> Result<BTreeMap<String, f64>> {
    let mut s = BTreeMap::new();
    let stats = |s: &mut BTreeMap<String, f64>, prefix: &str, v: &[f64]| {
        s.insert(format!("{prefix}max"), v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        s.insert(format!("{prefix}median"), median(v));
    };
    match report.experiment.parse::<ExperimentKind>()? {
        ExperimentKind::PartitionCheck => {
            let v = report.column("residual")?;
            s.insert("max_residual".into(), v.iter().copied().fold(0.0, f64::max));
        }
        ExperimentKind::Besov | ExperimentKind::Embeddings => {
            let (ni, vi) = (report.column_index("norm_name").unwrap(), report.column_index("value").unwrap());
            let mut by_name: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for r in &report.rows {
                by_name.entry(r[ni].to_string()).or_default().extend(r[vi].as_f64());
            }
            for (name, v) in &by_name {
                stats(&mut s, &format!("{name}."), v);
            }
            if report.experiment == "embeddings" {
                let rows = embedding_rows_from(report)?;
                let (c, cp) = embedding_constants(&rows);
                s.insert("c".into(), c);
                s.insert("c_prime".into(), cp);
            }
        }
        ExperimentKind::Boundedness => {
            let v = report.column("ratio")?;
            stats(&mut s, "", &v);
            s.insert("defined_pairs".into(), v.len() as f64);
        }
        ExperimentKind::SymbolCheck => {
            let v = report.column("max_residual")?;
            s.insert("max_residual".into(), v.iter().copied().fold(0.0, f64::max));
        }
        ExperimentKind::Iterate => {
            s.insert("l2_norm".into(), report.column("l2_norm")?[0]);
            s.insert("divergence_residual".into(), report.column("divergence_residual")?[0]);
        }
        ExperimentKind::Inflation => {
            let v = report.column("ratio")?;
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            s.insert("band_lo".into(), lo);
            s.insert("band_hi".into(), hi);
            s.insert("band_ratio".into(), hi / lo);
        }
        ExperimentKind::Chemin => {
            let (r, b) = (report.column("ratio")?, report.column("bound")?);
            let worst = r.iter().zip(&b).map(|(r, b)| r / b).fold(0.0, f64::max);
            s.insert("max_ratio_over_bound".into(), worst);
        }
    }
    Ok(s)
}

fn finish(mut report: ExperimentReport, extra: BTreeMap<String, f64>) -> Result<ExperimentReport> {
    report.summary = summarize(&report)?;
    report.summary.extend(extra);
    Ok(report)
}

fn partition_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let samples: usize = cfg.opt("samples", 10_000)?;
    let (lo, hi) = (cfg.opt_f64("r_lo", 1e-3)?, cfg.opt_f64("r_hi", 1e3)?);
    if samples == 0 || !(lo > 0.0 && hi > lo) {
        return Err(Error::Config("partition-check needs samples >= 1 and 0 < r_lo < r_hi".into()));
    }
    let psi = Psi::perturbed(cfg.opt_f64("psi_eps", 0.0)?);
    let mut report = ExperimentReport::new(cfg.experiment.as_str(), cfg.to_map(), &["sample_id", "r", "partition_sum", "residual"]);
    let (a, b) = (lo.ln(), hi.ln());
    for i in 0..samples {
        let t = if samples > 1 { i as f64 / (samples - 1) as f64 } else { 0.5 };
        let r = (a + t * (b - a)).exp();
        let sum = psi.partition_sum(r);
        report.push_row(vec![i.into(), r.into(), sum.into(), (sum - 1.0).abs().into()]);
    }
    let report = finish(report, BTreeMap::new())?;
    let mut report = report;
    let max = report.summary["max_residual"];
    report.check(max < 1e-10, format!("partition of unity: max residual {max:e} >= 1e-10"));
    Ok(report)
}

fn ensemble_fields(cfg: &ExperimentConfig, offset: u64, profile: Profile) -> Result<Vec<SpectralField>> {
    if cfg.ensemble_size == 0 {
        return Err(Error::Config("ensemble_size must be >= 1".into()));
    }
    let grid = cfg.grid()?;
    (0..cfg.ensemble_size as u64).map(|i| sample_field(&grid, cfg.seed, offset + i, profile)).collect()
}

fn besov(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (s, p, q) = (cfg.opt_f64("s", 0.0)?, cfg.opt_f64("p", f64::INFINITY)?, cfg.opt_f64("q", f64::INFINITY)?);
    let grid = cfg.grid()?;
    let fields = ensemble_fields(cfg, 0, cfg.profile())?;
    let mut report = ExperimentReport::new(cfg.experiment.as_str(), cfg.to_map(), &["field_id", "norm_name", "value"]);
    let requested = format!("besov({s},{p},{q})");
    let mut monotone_violations = 0usize;
    let mut non_finite = 0usize;
    for (i, f) in fields.iter().enumerate() {
        let v = besov_norm(f, &BesovParams::for_grid(&grid, s, p, q)?).value;
        non_finite += usize::from(!v.is_finite());
        report.push_row(vec![i.into(), requested.clone().into(), v.into()]);
        let mut previous = f64::INFINITY;
        for qq in [1.0, 2.0, f64::INFINITY] {
            let v = besov_norm(f, &BesovParams::for_grid(&grid, s, p, qq)?).value;
            report.push_row(vec![i.into(), format!("besov({s},{p},{qq})").into(), v.into()]);
            if v > previous * (1.0 + 1e-12) && !f.is_zero() {
                monotone_violations += 1;
            }
            previous = v;
        }
    }
    let mut report = finish(report, BTreeMap::from([("monotone_violations".into(), monotone_violations as f64)]))?;
    report.check(non_finite == 0, "besov norm finite");
    report.check(monotone_violations == 0, format!("l^q monotonicity: {monotone_violations} violations"));
    Ok(report)
}

const EMBEDDING_NAMES: [&str; 5] = ["b_inf_inf_heat", "grad_bmo", "b_inf2_heat", "besov_inf_inf", "besov_inf_2"];

fn embedding_rows_from(report: &ExperimentReport) -> Result<Vec<crate::function_spaces::EmbeddingRow>> {
    let (ni, vi) = (report.column_index("norm_name").unwrap(), report.column_index("value").unwrap());
    let mut out = Vec::new();
    for chunk in report.rows.chunks(EMBEDDING_NAMES.len()) {
        let get = |name: &str| -> Result<f64> {
            chunk
                .iter()
                .find(|r| r[ni] == Cell::Text(name.into()))
                .and_then(|r| r[vi].as_f64())
                .ok_or_else(|| Error::Format(format!("embedding row lacks {name}")))
        };
        out.push(crate::function_spaces::EmbeddingRow {
            b_inf_inf_heat: get("b_inf_inf_heat")?,
            grad_bmo: get("grad_bmo")?,
            b_inf2_heat: get("b_inf2_heat")?,
            besov_inf_inf: get("besov_inf_inf")?,
            besov_inf_2: get("besov_inf_2")?,
        });
    }
    Ok(out)
}

fn embeddings(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let fields = ensemble_fields(cfg, 0, cfg.profile())?;
    let mut report = ExperimentReport::new(cfg.experiment.as_str(), cfg.to_map(), &["field_id", "norm_name", "value"]);
    let mut rows = Vec::new();
    for (i, f) in fields.iter().enumerate() {
        let r = embedding_row(f)?;
        let values = [r.b_inf_inf_heat, r.grad_bmo, r.b_inf2_heat, r.besov_inf_inf, r.besov_inf_2];
        for (name, v) in EMBEDDING_NAMES.iter().zip(values) {
            report.push_row(vec![i.into(), (*name).into(), v.into()]);
        }
        rows.push((r, f.is_zero()));
    }
    let (c, cp) = embedding_constants(&rows.iter().map(|(r, _)| *r).collect::<Vec<_>>());
    let tol = 1.0 + 1e-12;
    let chain_violations = rows
        .iter()
        .filter(|(r, _)| r.b_inf_inf_heat > c * r.grad_bmo * tol || c * r.grad_bmo > cp * r.b_inf2_heat * tol)
        .count();
    let monotone_violations = rows.iter().filter(|(r, zero)| !zero && r.besov_inf_inf > r.besov_inf_2 * tol).count();
    let extra = BTreeMap::from([
        ("chain_violations".into(), chain_violations as f64),
        ("monotone_violations".into(), monotone_violations as f64),
    ]);
    let mut report = finish(report, extra)?;
    report.check(c.is_finite() && cp.is_finite() && c > 0.0 && cp > 0.0, "embedding constants finite and positive");
    report.check(chain_violations == 0, format!("embedding chain: {chain_violations} violations"));
    report.check(monotone_violations == 0, format!("l^q monotonicity: {monotone_violations} violations"));
    Ok(report)
}

fn boundedness(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let op = operator_by_name(cfg.opt_str("operator", "mu"))?;
    let in1 = parse_norm(cfg.opt_str("in1", "besov:0:inf:inf"))?;
    let in2 = parse_norm(cfg.opt_str("in2", "l2"))?;
    let out = parse_norm(cfg.opt_str("out", "l2"))?;
    let profile2: Profile = match cfg.options.get("profile2") {
        Some(p) => p.parse()?,
        // The second argument must have the same field kind as the first.
        None => match cfg.profile() {
            Profile::DivfreeVector | Profile::DivfreeFlatBminus1 => Profile::DivfreeVector,
            _ => Profile::WhiteL2,
        },
    };
    let fs = ensemble_fields(cfg, 0, cfg.profile())?;
    let gs = ensemble_fields(cfg, cfg.ensemble_size as u64, profile2)?;
    let pairs: Vec<(SpectralField, SpectralField)> = fs.into_iter().zip(gs).collect();
    let b = boundedness_ratio(op.as_ref(), in1, in2, out, &pairs)?;
    let mut report = ExperimentReport::new(cfg.experiment.as_str(), cfg.to_map(), &["pair_id", "ratio"]);
    for (i, r) in b.ratios.iter().enumerate() {
        let cell = match r {
            Some(v) => Cell::Float(*v),
            None => Cell::Text("undefined".into()),
        };
        report.push_row(vec![i.into(), cell]);
    }
    let mut report = finish(report, BTreeMap::new())?;
    report.check(b.ratios.iter().flatten().all(|r| r.is_finite()), format!("{} ratios finite", b.operator));
    report.check(b.ratios.iter().any(Option::is_some), "at least one pair with nonzero input norms");
    Ok(report)
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, r_lo: f64, r_hi: f64) -> Frequency {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim) {
            *c = rng.gen_range(-1.0..1.0);
        }
        let f = Frequency(v);
        let n = f.norm();
        if n > 1e-3 && n <= 1.0 {
            let r = rng.gen_range(r_lo..r_hi);
            return f * (r / n);
        }
    }
}

/// Random `(ξ, η)` with `|ξ|, |η| ≤ 4`.
pub fn symbol_samples(dim: usize, seed: u64, count: usize) -> Vec<(Frequency, Frequency)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (random_point(&mut rng, dim, 0.0, 4.0), random_point(&mut rng, dim, 0.0, 4.0))).collect()
}

/// Random `(ξ, η)` with `χ3(ξ, η) > 0`.
pub fn chi3_samples(dim: usize, seed: u64, count: usize) -> Vec<(Frequency, Frequency)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let eta = random_point(&mut rng, dim, 1.0, 6.0);
        let xi = random_point(&mut rng, dim, 0.0, eta.norm() / 5.0);
        if chi_partition(&xi, &eta).2 > 0.0 {
            out.push((xi, eta));
        }
    }
    out
}

/// Largest `|whole - Σ parts|` over the samples.
pub fn decomposition_residual(whole: &Symbol, parts: &[(f64, &Symbol)], samples: &[(Frequency, Frequency)]) -> f64 {
    samples
        .iter()
        .map(|(xi, eta)| {
            let w = whole.eval_scalar(xi, eta).expect("scalar symbol");
            let sum = parts.iter().fold(w * 0.0, |acc, (c, p)| acc + p.eval_scalar(xi, eta).expect("scalar symbol") * *c);
            (w - sum).norm()
        })
        .fold(0.0, f64::max)
}

fn symbol_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let count: usize = cfg.opt("samples", 10_000)?;
    if count == 0 {
        return Err(Error::Config("samples must be >= 1".into()));
    }
    let general = symbol_samples(cfg.dim, cfg.seed, count);
    let chi3 = chi3_samples(cfg.dim, cfg.seed, count);
    let (l1, l2) = (e(0), e(1));
    let mu = |k| mu_symbols(k, l1, l2);
    let nu = |k| nu_symbols(k, l1, l2);
    let checks: Vec<(&str, f64, f64)> = vec![
        (
            "mu=mu1+mu2+mu3",
            decomposition_residual(&mu(MuKind::Mu), &[(1.0, &mu(MuKind::Mu1)), (1.0, &mu(MuKind::Mu2)), (1.0, &mu(MuKind::Mu3))], &general),
            1e-12,
        ),
        (
            "nu=nu1+nu2+nu3",
            decomposition_residual(&nu(NuKind::Nu), &[(1.0, &nu(NuKind::Nu1)), (1.0, &nu(NuKind::Nu2)), (1.0, &nu(NuKind::Nu3))], &general),
            1e-12,
        ),
        (
            "mu3=mu3p-mu3pp",
            decomposition_residual(&mu(MuKind::Mu3), &[(1.0, &mu(MuKind::Mu3p)), (-1.0, &mu(MuKind::Mu3pp))], &chi3),
            1e-10,
        ),
        (
            "nu3=nu3p-nu3pp",
            decomposition_residual(&nu(NuKind::Nu3), &[(1.0, &nu(NuKind::Nu3p)), (-1.0, &nu(NuKind::Nu3pp))], &chi3),
            1e-10,
        ),
    ];
    let mut report =
        ExperimentReport::new(cfg.experiment.as_str(), cfg.to_map(), &["identity", "samples", "max_residual", "tolerance"]);
    for (name, r, tol) in &checks {
        report.push_row(vec![(*name).into(), count.into(), (*r).into(), (*tol).into()]);
    }
    let mut report = finish(report, BTreeMap::new())?;
    for (name, r, tol) in checks {
        report.check(r < tol, format!("{name}: residual {r:e} >= {tol:e}"));
    }
    Ok(report)
}

fn iterate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let n: usize = cfg.opt("n", 2)?;
    let t = cfg.opt_f64("t", 1.0)?;
    let steps: usize = cfg.opt("steps", 64)?;
    let u0 = match cfg.options.get("input") {
        Some(path) => SpectralField::load(Path::new(path))?,
        None => sample_field(&cfg.grid()?, cfg.seed, 0, cfg.profile())?,
    };
    let u = picard_iterate(&u0, n, t, steps)?;
    if let Some(path) = cfg.options.get("output_field") {
        u.save(Path::new(path))?;
    }
    let (l2, linf) = (lp_norm(&u, 2.0), lp_norm(&u, f64::INFINITY));
    let div = if u.kind() == crate::spectral::FieldKind::Vector { u.divergence_residual() } else { 0.0 };
    let mut report = ExperimentReport::new(
        cfg.experiment.as_str(),
        cfg.to_map(),
        &["n", "t", "steps", "l2_norm", "linf_norm", "divergence_residual"],
    );
    report.push_row(vec![n.into(), t.into(), steps.into(), l2.into(), linf.into(), div.into()]);
    let mut report = finish(report, BTreeMap::new())?;
    report.check(l2.is_finite() && linf.is_finite(), "iterate finite");
    report.check(div <= 1e-8, format!("divergence residual {div:e} > 1e-8"));
    Ok(report)
}

fn inflation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let alpha = match cfg.opt_str("alpha", "sqrt") {
        "sqrt" => AlphaKind::LqNotL2,
        "inv" => AlphaKind::L2Control,
        other => return Err(Error::Config(format!("alpha must be sqrt or inv, got '{other}'"))),
    };
    let ns: Vec<u32> = parse_list(cfg.opt_str("ns", "15,20,30,40"))?;
    let eps = cfg.opt_f64("zeta_eps", 0.05)?;
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::Config(format!("zeta_eps = {eps} outside (0, 1/4)")));
    }
    let nodes: usize = cfg.opt("nodes", 48)?;
    let quad = QuadSpec::with_nodes(nodes);
    let inf = inflation_experiment(&ns, &alpha, &default_zeta_samples(eps), &quad)?;
    let mut report = ExperimentReport::new(
        cfg.experiment.as_str(),
        cfg.to_map(),
        &["N", "zeta_id", "value_third_component", "sum_alpha_sq", "ratio"],
    );
    for r in &inf.rows {
        report.push_row(vec![r.n.into(), r.zeta_id.into(), r.value_third_component.into(), r.sum_alpha_sq.into(), r.ratio.into()]);
    }
    let extra = BTreeMap::from([
        ("max_refinement_change".into(), inf.max_refinement_change),
        ("max_first_over_third".into(), inf.max_first_over_third),
    ]);
    let mut report = finish(report, extra)?;
    report.check(inf.max_refinement_change < 0.01, format!("quadrature refinement change {:e} >= 1%", inf.max_refinement_change));
    match alpha {
        AlphaKind::LqNotL2 => {
            report.check(inf.strictly_increasing, "value strictly increasing in N");
            let ratio = report.summary["band_ratio"];
            report.check(ratio < 3.0, format!("band C/c = {ratio} >= 3"));
        }
        _ => {
            let change = convergence_change(&inf.rows);
            report.summary.insert("last_relative_change".into(), change);
            report.check(change < 0.02, format!("last relative change {change:e} >= 2%"));
        }
    }
    Ok(report)
}

/// Largest `|v(N_last) - v(N_prev)| / |v(N_last)|` over `ζ`.
pub fn convergence_change(rows: &[crate::counterexample::InflationRow]) -> f64 {
    let mut by_zeta: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_zeta.entry(r.zeta_id).or_default().push(r.value_third_component);
    }
    by_zeta
        .values()
        .filter(|v| v.len() >= 2)
        .map(|v| {
            let (a, b) = (v[v.len() - 1], v[v.len() - 2]);
            (a - b).abs() / a.abs()
        })
        .fold(0.0, f64::max)
}

fn chemin(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (j_lo, j_hi): (i32, i32) = (cfg.opt("j_lo", 0)?, cfg.opt("j_hi", 5)?);
    let t = cfg.opt_f64("t", 1.0)?;
    if j_hi < j_lo || !(t > 0.0) {
        return Err(Error::Config("chemin needs j_lo <= j_hi and t > 0".into()));
    }
    let fields = ensemble_fields(cfg, 0, cfg.profile())?;
    let mut report = ExperimentReport::new(cfg.experiment.as_str(), cfg.to_map(), &["field_id", "j", "ratio", "bound"]);
    let mut violations = 0usize;
    for (i, f) in fields.iter().enumerate() {
        for j in j_lo..=j_hi {
            let ratio = chemin_decay_check(f, j, t)?;
            let bound = chemin_bound(j, t);
            violations += usize::from(ratio > bound * (1.0 + 1e-9));
            report.push_row(vec![i.into(), j.into(), ratio.into(), bound.into()]);
        }
    }
    let mut report = finish(report, BTreeMap::from([("violations".into(), violations as f64)]))?;
    report.check(violations == 0, format!("heat decay bound: {violations} violations"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_round_trip() {
        let mut c = ExperimentConfig::new(ExperimentKind::Inflation);
        c.seed = 42;
        c.period = 8.0 * PI;
        c.profile = Some(Profile::WhiteL2);
        c.set("ns", "15,20").unwrap();
        c.set("zeta_eps", "0.03").unwrap();
        c.output = Some(PathBuf::from("out/inflation"));
        let back = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn later_values_override() {
        let mut c = ExperimentConfig::parse("experiment = besov\nseed = 3\ns = -1\n").unwrap();
        c.set("seed", "9").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.options["s"], "-1");
    }

    #[test]
    fn bad_keys_rejected() {
        assert!(ExperimentConfig::parse("experiment = nope\n").is_err());
        assert!(ExperimentConfig::parse("seed = 3\n").is_err());
        assert!(ExperimentConfig::parse("experiment = besov\nalpha = sqrt\n").is_err());
        assert!(ExperimentConfig::parse("experiment = besov\njunk\n").is_err());
    }

    #[test]
    fn period_accepts_pi_multiples() {
        let c = ExperimentConfig::parse("experiment = chemin\nperiod = 2pi\n").unwrap();
        assert_eq!(c.period, 2.0 * PI);
    }

    #[test]
    fn norms_parse() {
        assert_eq!(parse_norm("l2").unwrap(), NormSelector::Lp { p: 2.0 });
        assert_eq!(parse_norm("besov:-1:inf:inf").unwrap(), NormSelector::Besov { s: -1.0, p: f64::INFINITY, q: f64::INFINITY });
        assert!(parse_norm("h1").is_err());
    }

    #[test]
    fn partition_check_passes_and_fault_fails() {
        let mut c = ExperimentConfig::new(ExperimentKind::PartitionCheck);
        c.set("samples", "500").unwrap();
        let r = run(&c).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        c.set("psi_eps", "1e-3").unwrap();
        let r = run(&c).unwrap();
        assert!(!r.passed());
        assert!(r.failures[0].contains("partition of unity"));
    }

    #[test]
    fn vector_boundedness_pairs_vector_fields() {
        let mut c = ExperimentConfig::new(ExperimentKind::Boundedness);
        c.dim = 3;
        c.points = 8;
        c.ensemble_size = 2;
        c.profile = Some(Profile::DivfreeFlatBminus1);
        c.set("operator", "t2").unwrap();
        c.set("in1", "besov:-1:inf:inf").unwrap();
        let r = run(&c).unwrap();
        assert!(r.column("ratio").unwrap().iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn summary_recomputes_from_rows() {
        let mut c = ExperimentConfig::new(ExperimentKind::SymbolCheck);
        c.set("samples", "200").unwrap();
        let r = run(&c).unwrap();
        let s = summarize(&r).unwrap();
        for (k, v) in s {
            assert_eq!(r.summary[&k], v);
        }
    }
}
