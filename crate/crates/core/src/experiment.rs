//! Experiment runner: expands a JSON configuration into a grid of protocol
//! instances, evaluates every quantity of interest on each, and turns the
//! results into verification reports, per-instance records and sweep tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::discriminate::{
    barnett_croke_certificate, c_max, conditional_distribution, diagonal_ensemble_optimum, helstrom_oracle,
    projective_povm, success_probability, Certificate, Povm, DEFAULT_CERTIFICATE_TOL,
};
use crate::error::{check_dim, invalid, Error, Result};
use crate::infotherm::{
    chain_inequality, channel_entropies, fano_floor, holevo, l1_distance, shannon_entropy,
    thermo_ledger_diagonal, ChainCheck, FanoFloor, ProbVector, ThermoLedger, IDENTITY_TOL,
};
use crate::protocol::{encode, prepare_register, shift_family, Encoding, Register};
use crate::qmatrix::{haar_unitary, numerical_rank, partial_trace, DensityMatrix, Keep, DEFAULT_RANK_TOL};
use crate::ranklaws::{dephasing_rank, lemma1_check, Origin, RankLawReport, PURITY_GAP};
use crate::seeds::instance_rng;
use crate::thermal::{gibbs_state, multicopy_coarse_grain, BlockedThermalState, Hamiltonian};

/// Failing instances listed per law; the total count is always reported.
pub const MAX_REPORTED_FAILURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(invalid(format!("unknown format `{s}` (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegisterConfig {
    /// Diagonal register with the given message distribution; needs one entry per letter.
    Explicit { probabilities: Vec<f64> },
    /// Gibbs state of the `n` lowest system levels, rotated by a Haar unitary.
    Haar {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    CMax,
    Holevo,
    MutualInfo,
    PSucc,
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c_max" => Ok(Self::CMax),
            "holevo" => Ok(Self::Holevo),
            "mutual_info" => Ok(Self::MutualInfo),
            "p_succ" => Ok(Self::PSucc),
            _ => Err(invalid(format!(
                "unknown quantity `{s}` (expected c_max, holevo, mutual_info or p_succ)"
            ))),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CMax => "c_max",
            Self::Holevo => "holevo",
            Self::MutualInfo => "mutual_info",
            Self::PSucc => "p_succ",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Beta,
    N,
    Copies,
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Self::Beta),
            "n" => Ok(Self::N),
            "copies" => Ok(Self::Copies),
            _ => Err(invalid(format!("unknown axis `{s}` (expected beta, n or copies)"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Beta => "beta",
            Self::N => "n",
            Self::Copies => "copies",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub quantity: Quantity,
    pub axis: Axis,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(c) => vec![c],
        OneOrMany::Many(v) => v,
    })
}

fn default_copies() -> Vec<usize> {
    vec![1]
}

fn default_trials() -> usize {
    1
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

/// A grid of protocol instances.
///
/// The system is given either by explicit `energies` or by a list of `dims`,
/// each expanded to equally spaced levels spanning `[0, 1]`. When `ns` is
/// absent every divisor `n ≥ 2` of `d_S^copies` is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub betas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    #[serde(default = "default_copies", deserialize_with = "one_or_many")]
    pub copies: Vec<usize>,
    pub register: RegisterConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Decode letter `x` with projector `(x + offset) mod n`; nonzero values inject a labeling fault.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub povm_offset: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl Default for ExperimentConfig {
    /// `d_S ∈ {2,4,6,8}`, `β ∈ {0, 0.5, 1, 2, 5}`, every divisor `n ≥ 2`, 20 Haar registers each.
    fn default() -> Self {
        Self {
            energies: None,
            dims: Some(vec![2, 4, 6, 8]),
            betas: vec![0.0, 0.5, 1.0, 2.0, 5.0],
            ns: None,
            copies: vec![1],
            register: RegisterConfig::Haar { seed: None },
            trials: 20,
            seed: 0,
            povm_offset: 0,
            sweep: None,
            output: None,
        }
    }
}

/// Divisors `n ≥ 2` of `d`, ascending.
pub fn divisors(d: usize) -> Vec<usize> {
    (2..=d).filter(|&n| d.is_multiple_of(n)).collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("bad config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Seed all per-instance streams derive from.
    pub fn master_seed(&self) -> u64 {
        match self.register {
            RegisterConfig::Haar { seed: Some(s) } => s,
            _ => self.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let RegisterConfig::Haar { seed: s } = &mut self.register {
            *s = None;
        }
        self
    }

    pub fn hamiltonians(&self) -> Result<Vec<Hamiltonian>> {
        match (&self.energies, &self.dims) {
            (Some(e), None) => Ok(vec![Hamiltonian::new(e.clone())?]),
            (None, Some(dims)) => dims.iter().map(|&d| Hamiltonian::unit_window(d)).collect(),
            _ => Err(invalid("config needs exactly one of `energies` or `dims`")),
        }
    }

    /// Every instance of the grid, in the order H, copies, n, β, trial.
    pub fn instances(&self) -> Result<Vec<GridInstance>> {
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        let master = self.master_seed();
        let mut out = Vec::new();
        for h in self.hamiltonians()? {
            for &copies in &self.copies {
                if copies == 0 {
                    return Err(invalid("copies must be >= 1"));
                }
                let dim = u32::try_from(copies)
                    .ok()
                    .and_then(|c| h.dim().checked_pow(c))
                    .ok_or_else(|| invalid("joint dimension overflows"))?;
                let ns = self.ns.clone().unwrap_or_else(|| divisors(dim));
                for &n in &ns {
                    for &beta in &self.betas {
                        for trial in 0..self.trials {
                            let index = out.len();
                            let register = match &self.register {
                                RegisterConfig::Explicit { probabilities } => {
                                    RegisterConfig::Explicit { probabilities: probabilities.clone() }
                                }
                                RegisterConfig::Haar { .. } => RegisterConfig::Haar {
                                    seed: Some(instance_rng(master, index as u64).next_u64()),
                                },
                            };
                            let params = InstanceParams {
                                hamiltonian: h.clone(),
                                beta,
                                n,
                                copies,
                                register,
                                povm_offset: self.povm_offset,
                            };
                            params.validate()?;
                            out.push(GridInstance { index, trial, params });
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(invalid("the configured grid is empty"));
        }
        Ok(out)
    }
}

/// One protocol instance: a thermal system, a register and the shift encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    pub hamiltonian: Hamiltonian,
    pub beta: f64,
    pub n: usize,
    #[serde(default = "one")]
    pub copies: usize,
    pub register: RegisterConfig,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub povm_offset: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInstance {
    pub index: usize,
    pub trial: usize,
    pub params: InstanceParams,
}

/// Everything built for one instance, before any figure of merit is computed.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub blocked: BlockedThermalState,
    pub system: DensityMatrix,
    pub register: Register,
    pub encoding: Encoding,
    pub povm: Povm,
}

impl InstanceParams {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("bad instance: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("need at least two letters, got n = {}", self.n)));
        }
        if self.copies == 0 {
            return Err(invalid("copies must be >= 1"));
        }
        if !self.beta.is_finite() {
            return Err(Error::ThirdLaw(self.beta));
        }
        if self.beta < 0.0 {
            return Err(invalid(format!("inverse temperature must be >= 0, got {}", self.beta)));
        }
        let dim = u32::try_from(self.copies)
            .ok()
            .and_then(|c| self.hamiltonian.dim().checked_pow(c))
            .ok_or_else(|| invalid("joint dimension overflows"))?;
        if dim % self.n != 0 {
            return Err(Error::Indivisible { dim, letters: self.n });
        }
        if let RegisterConfig::Explicit { probabilities } = &self.register {
            check_dim(self.n, probabilities.len())?;
            Register::explicit(probabilities, self.n)?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Protocol> {
        self.validate()?;
        let n = self.n;
        let blocked = multicopy_coarse_grain(&self.hamiltonian, self.beta, self.copies, n)?;
        let system = blocked.to_density_matrix()?;
        let register = match &self.register {
            RegisterConfig::Explicit { probabilities } => Register::explicit(probabilities, n)?,
            RegisterConfig::Haar { seed } => {
                let mut levels = blocked.level_energies.clone();
                levels.sort_by(f64::total_cmp);
                levels.truncate(n);
                let gamma_r = gibbs_state(&Hamiltonian::new(levels)?, self.beta)?;
                prepare_register(&gamma_r, &haar_unitary(n, seed.unwrap_or(0)))?
            }
        };
        let encoding = encode(&register, &system, &shift_family(&blocked.partition))?;
        let labels: Vec<usize> = (0..n).map(|x| (x + self.povm_offset) % n).collect();
        let povm = projective_povm(&blocked.partition).relabeled(&labels)?;
        Ok(Protocol { blocked, system, register, encoding, povm })
    }

    pub fn evaluate(&self) -> Result<Evaluation> {
        Evaluation::of(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSummary {
    pub joint: usize,
    pub dephased_joint: usize,
}

/// All figures of merit of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub dim: usize,
    pub priors: Vec<f64>,
    /// Eigenvalues of each `ρ_x`, descending.
    pub spectra: Vec<Vec<f64>>,
    pub max_purity: f64,
    pub c_max: f64,
    pub p_succ: f64,
    /// Two-state optimum, for `n = 2`.
    pub helstrom: Option<f64>,
    /// Exact optimum over all measurements; the encoded states are always diagonal.
    pub diagonal_optimum: Option<f64>,
    pub certificate: Certificate,
    /// `p(y|x)` as `[y][x]`.
    pub conditional: Vec<Vec<f64>>,
    pub row_sum_defect: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub holevo: f64,
    pub mutual_information: f64,
    pub l1: f64,
    pub fano: FanoFloor,
    pub chain: ChainCheck,
    pub ledger: ThermoLedger,
    pub lemma1: RankLawReport,
    pub ranks: RankSummary,
}

impl Evaluation {
    pub fn of(params: &InstanceParams) -> Result<Self> {
        let proto = params.build()?;
        let n = params.n;
        let dim = proto.system.dim();
        let ens = &proto.encoding.ensemble;
        let priors = ens.priors();
        let px = ProbVector::new(priors.clone())?;

        let cond = conditional_distribution(ens, &proto.povm)?;
        let p_succ = success_probability(ens, &proto.povm)?;
        let cm = c_max(&proto.system, n)?;
        let helstrom = if n == 2 {
            Some(helstrom_oracle(priors[0], ens.state(0), priors[1], ens.state(1))?)
        } else {
            None
        };
        let certificate = barnett_croke_certificate(ens, &proto.povm, DEFAULT_CERTIFICATE_TOL)?;

        let h_x = shannon_entropy(&px);
        let chi = holevo(ens);
        let ce = channel_entropies(&px, &cond)?;
        let py = ProbVector::new(cond.output_distribution(px.as_slice())?)?;
        let l1 = l1_distance(&py, &px)?;
        let fano = fano_floor(h_x, cm.min(1.0), n)?;
        let chain = chain_inequality(h_x, chi, ce.mutual_information, fano.clamped);

        let joint = &proto.encoding.joint;
        let system_after = partial_trace(joint, (n, dim), Keep::B)?;
        let register_after = partial_trace(joint, (n, dim), Keep::A)?;
        let ledger = thermo_ledger_diagonal(
            &proto.system,
            &system_after,
            proto.register.state(),
            &register_after,
            &proto.blocked.level_energies,
            params.beta,
            ens,
        )?;

        let lemma1 = lemma1_check(proto.register.state(), &proto.system, ens, Origin::UnitaryProtocol)?;
        let deph = dephasing_rank(joint, (n, dim))?;
        debug_assert_eq!(deph.before, numerical_rank(joint, DEFAULT_RANK_TOL).value);

        Ok(Self {
            dim,
            spectra: ens.items().iter().map(|(_, r)| r.eigenvalues()).collect(),
            max_purity: ens.items().iter().map(|(_, r)| r.purity()).fold(0.0, f64::max),
            priors,
            c_max: cm,
            p_succ,
            helstrom,
            diagonal_optimum: diagonal_ensemble_optimum(ens),
            certificate,
            conditional: cond.table().to_vec(),
            row_sum_defect: cond.row_sum_defect(),
            h_x,
            h_y: ce.h_y,
            holevo: chi,
            mutual_information: ce.mutual_information,
            l1,
            fano,
            chain,
            ledger,
            lemma1,
            ranks: RankSummary { joint: deph.before, dephased_joint: deph.after },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub trial: usize,
    pub params: InstanceParams,
    pub result: Evaluation,
}

/// Evaluates every instance, on `threads` workers when given. Output order follows the grid.
pub fn run_grid(instances: &[GridInstance], threads: Option<usize>) -> Result<Vec<InstanceRecord>> {
    let eval = || {
        instances
            .par_iter()
            .map(|g| {
                Ok(InstanceRecord {
                    index: g.index,
                    trial: g.trial,
                    params: g.params.clone(),
                    result: g.params.evaluate()?,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot start {k} worker threads: {e}")))?
            .install(eval),
        None => eval(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailingInstance {
    pub index: usize,
    pub trial: usize,
    pub residual: f64,
    pub params: InstanceParams,
}

/// Outcome of one law across the grid. Residuals measure the size of a
/// violation (zero when an inequality holds strictly).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub pass: bool,
    pub tolerance: f64,
    pub checked: usize,
    pub failures: usize,
    pub max_residual: f64,
    pub failing: Vec<FailingInstance>,
}

type Residual = fn(&InstanceParams, &Evaluation) -> Option<f64>;

fn law(records: &[InstanceRecord], tolerance: f64, residual: Residual) -> LawReport {
    let mut report =
        LawReport { pass: true, tolerance, checked: 0, failures: 0, max_residual: 0.0, failing: Vec::new() };
    for rec in records {
        let Some(r) = residual(&rec.params, &rec.result) else { continue };
        report.checked += 1;
        report.max_residual = report.max_residual.max(r);
        if r > tolerance || r.is_nan() {
            report.failures += 1;
            if report.failing.len() < MAX_REPORTED_FAILURES {
                report.failing.push(FailingInstance {
                    index: rec.index,
                    trial: rec.trial,
                    residual: r,
                    params: rec.params.clone(),
                });
            }
        }
    }
    report.pass = report.failures == 0;
    report
}

fn positive(x: f64) -> f64 {
    x.max(0.0)
}

/// Gating laws: name, tolerance, residual.
pub const LAWS: &[(&str, f64, Residual)] = &[
    ("lemma1", 0.0, |_, e| {
        let l = &e.lemma1;
        let product = l.register_rank * l.system_rank;
        Some(
            positive(l.lhs as f64 - l.rhs as f64)
                + e.ranks.joint.abs_diff(product) as f64
                + positive(e.ranks.joint as f64 - e.ranks.dephased_joint as f64),
        )
    }),
    ("theorem2", 0.0, |_, e| {
        let deficit = e.lemma1.per_state_ranks.iter().map(|&r| e.dim - r).max().unwrap_or(0);
        Some(deficit as f64 + positive(e.max_purity - (1.0 - PURITY_GAP)))
    }),
    ("theorem3", IDENTITY_TOL, |_, e| Some((e.p_succ - e.c_max).abs())),
    ("helstrom", IDENTITY_TOL, |_, e| e.helstrom.map(|h| (h - e.c_max).abs())),
    ("l1_bound", IDENTITY_TOL, |_, e| Some(positive(e.l1 - (1.0 - e.c_max)))),
    ("fano_floor", IDENTITY_TOL, |_, e| Some(positive(e.fano.clamped - e.mutual_information))),
    ("entropy_identity", IDENTITY_TOL, |_, e| Some(e.ledger.entropy_identity_residual)),
    ("heat_identity", IDENTITY_TOL, |_, e| Some(e.ledger.heat_identity_residual)),
    ("holevo_le_beta_q", IDENTITY_TOL, |_, e| Some(positive(e.holevo - e.ledger.heat_beta_q))),
    ("chain", IDENTITY_TOL, |_, e| Some(e.chain.slacks.iter().map(|s| positive(-s)).fold(0.0, f64::max))),
    ("ixy_le_beta_q", IDENTITY_TOL, |_, e| Some(positive(e.mutual_information - e.ledger.heat_beta_q))),
    ("h_y_ge_h_x", IDENTITY_TOL, |_, e| (e.row_sum_defect <= IDENTITY_TOL).then(|| positive(e.h_x - e.h_y))),
];

/// Reported alongside the laws without affecting the verdict.
pub const DIAGNOSTICS: &[(&str, f64, Residual)] = &[
    ("barnett_croke", DEFAULT_CERTIFICATE_TOL, |_, e| {
        Some(e.certificate.max_cross_residual.max(-e.certificate.min_lagrange_eigenvalue).max(0.0))
    }),
    ("global_optimum", IDENTITY_TOL, |_, e| e.diagonal_optimum.map(|opt| positive(opt - e.p_succ))),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub instances: usize,
    pub seed: u64,
    pub laws: BTreeMap<String, LawReport>,
    pub diagnostics: BTreeMap<String, LawReport>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn verify_records(records: &[InstanceRecord], seed: u64) -> VerifyReport {
    let run = |table: &[(&str, f64, Residual)]| -> BTreeMap<String, LawReport> {
        table.iter().map(|(name, tol, f)| (name.to_string(), law(records, *tol, *f))).collect()
    };
    let laws = run(LAWS);
    VerifyReport {
        pass: laws.values().all(|l| l.pass),
        instances: records.len(),
        seed,
        laws,
        diagnostics: run(DIAGNOSTICS),
    }
}

pub fn verify(config: &ExperimentConfig, threads: Option<usize>) -> Result<VerifyReport> {
    let records = run_grid(&config.instances()?, threads)?;
    Ok(verify_records(&records, config.master_seed()))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Per-instance records as CSV (vectors `;`-separated, matrix rows `|`-separated) or JSON.
pub fn write_records<W: Write>(records: &[InstanceRecord], format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)
                .map_err(|e| invalid(format!("write failed: {e}")))?;
            writeln!(out).map_err(|e| invalid(format!("write failed: {e}")))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header: Vec<&str> = vec![
                "index",
                "trial",
                "d_s",
                "copies",
                "dim",
                "n",
                "beta",
                "priors",
                "spectra",
                "c_max",
                "p_succ",
                "helstrom",
                "conditional",
                "h_x",
                "h_y",
                "holevo",
                "mutual_information",
                "l1",
                "fano_floor",
                "certificate_pass",
            ];
            header.extend(ThermoLedger::CSV_HEADER);
            w.write_record(&header).map_err(csv_err)?;
            for rec in records {
                let (p, e) = (&rec.params, &rec.result);
                let spectra: Vec<String> = e.spectra.iter().map(|s| join(s)).collect();
                let table: Vec<String> = e.conditional.iter().map(|row| join(row)).collect();
                let mut row = vec![
                    rec.index.to_string(),
                    rec.trial.to_string(),
                    p.hamiltonian.dim().to_string(),
                    p.copies.to_string(),
                    e.dim.to_string(),
                    p.n.to_string(),
                    p.beta.to_string(),
                    join(&e.priors),
                    spectra.join("|"),
                    e.c_max.to_string(),
                    e.p_succ.to_string(),
                    e.helstrom.map(|h| h.to_string()).unwrap_or_default(),
                    table.join("|"),
                    e.h_x.to_string(),
                    e.h_y.to_string(),
                    e.holevo.to_string(),
                    e.mutual_information.to_string(),
                    e.l1.to_string(),
                    e.fano.clamped.to_string(),
                    e.certificate.pass.to_string(),
                ];
                row.extend(e.ledger.csv_row());
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| invalid(format!("write failed: {e}")))
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    invalid(format!("CSV write failed: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: f64,
    pub value: f64,
    pub bound_lo: f64,
    pub bound_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub quantity: Quantity,
    pub axis: Axis,
    /// Grouped by the parameters held fixed, ascending along the axis within a group.
    pub rows: Vec<SweepRow>,
    /// Row ranges `[start, end)` of the groups.
    pub groups: Vec<(usize, usize)>,
    /// Strict increase of `C_max` (or `P_succ`) with `β` in every group; `None` when no claim applies.
    pub monotone: Option<bool>,
}

/// Values closer than this to 1 count as saturated in the monotonicity check.
pub const SATURATION_TOL: f64 = 1e-15;

pub fn sweep(
    config: &ExperimentConfig,
    quantity: Quantity,
    axis: Axis,
    threads: Option<usize>,
) -> Result<SweepResult> {
    let records = run_grid(&config.instances()?, threads)?;
    let axis_value = |p: &InstanceParams| match axis {
        Axis::Beta => p.beta,
        Axis::N => p.n as f64,
        Axis::Copies => p.copies as f64,
    };
    // everything except the swept axis identifies a group
    let group_key = |r: &InstanceRecord| {
        let p = &r.params;
        let energies: Vec<u64> = p.hamiltonian.energies().iter().map(|e| e.to_bits()).collect();
        (
            energies,
            if axis == Axis::Copies { 0 } else { p.copies },
            if axis == Axis::N { 0 } else { p.n },
            if axis == Axis::Beta { 0 } else { p.beta.to_bits() },
            r.trial,
        )
    };
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        group_key(&records[a])
            .cmp(&group_key(&records[b]))
            .then(axis_value(&records[a].params).total_cmp(&axis_value(&records[b].params)))
    });

    let mut rows = Vec::with_capacity(order.len());
    let mut groups = Vec::new();
    let mut start = 0;
    for (k, &i) in order.iter().enumerate() {
        let (p, e) = (&records[i].params, &records[i].result);
        let (value, bound_lo, bound_hi) = match quantity {
            Quantity::CMax => (e.c_max, 1.0 / p.n as f64, 1.0),
            Quantity::PSucc => (e.p_succ, 1.0 / p.n as f64, 1.0),
            Quantity::Holevo => (e.holevo, e.mutual_information, e.h_x.min(e.ledger.heat_beta_q)),
            Quantity::MutualInfo => (e.mutual_information, e.fano.clamped, e.holevo),
        };
        rows.push(SweepRow { axis: axis_value(p), value, bound_lo, bound_hi });
        let last = k + 1 == order.len();
        if last || group_key(&records[order[k + 1]]) != group_key(&records[i]) {
            groups.push((start, k + 1));
            start = k + 1;
        }
    }

    let monotone = match (quantity, axis) {
        (Quantity::CMax | Quantity::PSucc, Axis::Beta) => Some(groups.iter().all(|&(a, b)| {
            let gapped = {
                let e = records[order[a]].params.hamiltonian.energies();
                e.first() != e.last()
            };
            rows[a..b].windows(2).all(|w| {
                let saturated = w[0].value >= 1.0 - SATURATION_TOL;
                if gapped && !saturated && w[1].axis > w[0].axis {
                    w[1].value > w[0].value
                } else {
                    w[1].value >= w[0].value - IDENTITY_TOL
                }
            })
        })),
        _ => None,
    };
    Ok(SweepResult { quantity, axis, rows, groups, monotone })
}

pub fn write_sweep<W: Write>(result: &SweepResult, format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, result)
                .map_err(|e| invalid(format!("write failed: {e}")))?;
            writeln!(out).map_err(|e| invalid(format!("write failed: {e}")))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["axis", "value", "bound_lo", "bound_hi"]).map_err(csv_err)?;
            for r in &result.rows {
                w.write_record([r.axis, r.value, r.bound_lo, r.bound_hi].map(|v| v.to_string()))
                    .map_err(csv_err)?;
            }
            w.flush().map_err(|e| invalid(format!("write failed: {e}")))
        }
    }
}
