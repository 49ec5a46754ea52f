//! Command implementations behind the `qtele` binary. Each command returns a
//! [`RunReport`]; the binary prints it and maps the outcome to an exit code.

pub mod io;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::channel::{
    apply_channel, simulate_protocol_mixed_detailed, standard_protocol, Protocol,
};
use crate::error::Error;
use crate::fef::{fef_optimize, fef_pure, singlet_fraction, FefOptions};
use crate::fidelity::{
    flip_operator, monte_carlo_fidelity, monte_carlo_twirl, transmission_fidelity, twirl,
    MIN_FIDELITY_SAMPLES,
};
use crate::linalg::{
    haar_unitary, random_density_matrix, random_pure_state, tensor, Complex64, ComplexMatrix,
    DensityMatrix, Ensemble, PureState, Rng,
};
use crate::optimal::{compare, optimal_fidelity, optimal_protocol};
use crate::tolerance::Tolerances;
use crate::weyl::{check_identities, local_dim, max_entangled, MAX_LOCAL_DIM};

use io::{load_protocol, load_state, LoadedState, MatrixJson, StateFile};

/// Z-score bound for Monte Carlo agreement checks.
pub const MAX_Z: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numeric(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Flags shared by every command.
#[derive(Debug, Clone)]
pub struct GlobalOptions {
    /// Echoed verbatim into the report.
    pub command: String,
    pub seed: u64,
    /// Overrides the command's default pass threshold.
    pub tol: Option<f64>,
}

impl GlobalOptions {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Self {
            command: command.into(),
            seed,
            tol: None,
        }
    }

    fn threshold(&self, default: f64) -> CliResult<f64> {
        match self.tol {
            Some(t) if !(t.is_finite() && t > 0.0) => {
                Err(CliError::Usage(format!("--tol must be positive, got {t}")))
            }
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportTolerances {
    /// Pass threshold for the command's deterministic checks.
    pub threshold: f64,
    /// Z-score bound for Monte Carlo checks.
    pub max_z: f64,
    /// Validation tolerances applied to input files.
    pub input: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub tolerances: ReportTolerances,
    pub results: Map<String, Value>,
    pub passed: bool,
    pub failures: Vec<String>,
    pub wall_time_seconds: f64,
}

impl RunReport {
    /// The numeric results as compact JSON; identical inputs and seed give
    /// identical strings.
    pub fn numeric_fields(&self) -> String {
        serde_json::to_string(&self.results).expect("results are plain JSON")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain JSON")
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    /// Plain `key = value` listing for terminals.
    pub fn to_table(&self) -> String {
        let mut out = format!("command    {}\nseed       {}\n", self.command, self.seed);
        let mut rows = Vec::new();
        for (k, v) in &self.results {
            flatten(k, v, &mut rows);
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        for f in &self.failures {
            out.push_str(&format!("FAILED: {f}\n"));
        }
        out.push_str(if self.passed {
            "status     PASS\n"
        } else {
            "status     FAIL\n"
        });
        out.push_str(&format!("wall time  {:.3} s\n", self.wall_time_seconds));
        out
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&format!("{prefix}.{k}"), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Collects results and failures while a command runs.
struct Builder {
    started: Instant,
    global: GlobalOptions,
    threshold: f64,
    results: Map<String, Value>,
    failures: Vec<String>,
}

impl Builder {
    fn new(global: &GlobalOptions, default_threshold: f64) -> CliResult<Self> {
        Ok(Self {
            started: Instant::now(),
            threshold: global.threshold(default_threshold)?,
            global: global.clone(),
            results: Map::new(),
            failures: Vec::new(),
        })
    }

    fn put<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).expect("serializable result");
        self.results.insert(key.to_string(), v);
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(message());
        }
    }

    fn finish(self) -> RunReport {
        RunReport {
            command: self.global.command,
            seed: self.global.seed,
            tolerances: ReportTolerances {
                threshold: self.threshold,
                max_z: MAX_Z,
                input: Tolerances::file_input(),
            },
            results: self.results,
            passed: self.failures.is_empty(),
            failures: self.failures,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn check_local_dim(n: usize) -> CliResult<()> {
    if !(2..=MAX_LOCAL_DIM).contains(&n) {
        return Err(CliError::Usage(format!(
            "n must be in [2, {MAX_LOCAL_DIM}], got {n}"
        )));
    }
    Ok(())
}

fn resource_dim(state: &LoadedState, path: &Path) -> CliResult<usize> {
    let n = local_dim(state.dim()).map_err(|e| {
        CliError::Input(format!("{}: not a bipartite resource: {e}", path.display()))
    })?;
    if n < 2 {
        return Err(CliError::Input(format!(
            "{}: resource must have local dimension at least 2",
            path.display()
        )));
    }
    Ok(n)
}

fn ensemble_of(state: &LoadedState) -> CliResult<Ensemble> {
    Ok(match state {
        LoadedState::Pure(p) => Ensemble::new(vec![(1.0, p.clone())])?,
        LoadedState::Density(d) => d.spectral_ensemble(1e-14),
    })
}

fn matrix_json(m: &ComplexMatrix) -> MatrixJson {
    MatrixJson::from_matrix(m)
}

/// Which correction unitaries to apply.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolChoice {
    Standard,
    /// `T_γβ = W·U_γβ` from the FEF maximizer of the resource.
    Optimal,
    File(PathBuf),
}

impl ProtocolChoice {
    fn label(&self) -> String {
        match self {
            ProtocolChoice::Standard => "standard".into(),
            ProtocolChoice::Optimal => "optimal".into(),
            ProtocolChoice::File(p) => format!("file:{}", p.display()),
        }
    }
}

fn fef_options(global: &GlobalOptions, restarts: usize) -> CliResult<FefOptions> {
    let opts = FefOptions {
        restarts,
        seed: global.seed,
        ..FefOptions::default()
    };
    opts.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(opts)
}

fn build_protocol(
    choice: &ProtocolChoice,
    chi: &DensityMatrix,
    n: usize,
    opts: &FefOptions,
    b: &mut Builder,
) -> CliResult<Protocol> {
    match choice {
        ProtocolChoice::Standard => Ok(standard_protocol(n)?),
        ProtocolChoice::Optimal => {
            let fef = fef_optimize(chi, opts)?;
            b.put("fef", fef.value);
            b.put("f_optimal_formula", optimal_fidelity(chi, &fef)?);
            Ok(optimal_protocol(chi, &fef)?)
        }
        ProtocolChoice::File(path) => {
            let p = load_protocol(path)?;
            if p.n() != n {
                return Err(CliError::Input(format!(
                    "{}: protocol has n = {}, resource has n = {n}",
                    path.display(),
                    p.n()
                )));
            }
            Ok(p)
        }
    }
}

/// Checks the operator-basis and Bell-basis identities for dimension `n`.
pub fn cmd_basis_check(n: usize, global: &GlobalOptions) -> CliResult<RunReport> {
    check_local_dim(n)?;
    let mut b = Builder::new(global, 1e-10)?;
    let mut rng = Rng::from_seed(global.seed);
    let v = check_identities(n, 50, &mut rng)?;
    let worst = v.max();
    b.put("n", n);
    b.put("violations", v);
    b.put("max_violation", worst);
    let tol = b.threshold;
    b.check(worst <= tol, || {
        format!("max identity violation {worst:e} exceeds {tol:e}")
    });
    Ok(b.finish())
}

/// Kinds of state produced by `gen`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    /// Random pure resource on `n × n`.
    Pure,
    /// Random resource density matrix on `n × n` of the given rank.
    Density,
    /// Random pure input qudit.
    InputPure,
    /// Random input density matrix of the given rank.
    InputDensity,
    /// Maximally entangled `|Φ⟩`.
    Phi,
    /// `(1 ⊗ V)|Φ⟩` for Haar-random `V`.
    RotatedPhi,
    /// `p|Φ⟩⟨Φ| + (1 − p) I/n²`.
    Isotropic,
    /// `cos θ|00⟩ + sin θ|11⟩`.
    Schmidt,
}

impl GenKind {
    fn name(self) -> &'static str {
        match self {
            GenKind::Pure => "pure",
            GenKind::Density => "density",
            GenKind::InputPure => "input-pure",
            GenKind::InputDensity => "input-density",
            GenKind::Phi => "phi",
            GenKind::RotatedPhi => "rotated-phi",
            GenKind::Isotropic => "isotropic",
            GenKind::Schmidt => "schmidt",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenRequest {
    pub kind: GenKind,
    pub n: usize,
    /// Rank for `density` and `input-density`; full rank when absent.
    pub rank: Option<usize>,
    /// Mixing weight for `isotropic`.
    pub p: Option<f64>,
    /// Angle for `schmidt`.
    pub theta: Option<f64>,
    pub out: PathBuf,
}

fn generate(req: &GenRequest, rng: &mut Rng) -> CliResult<(StateFile, BTreeMap<String, String>)> {
    let n = req.n;
    let mut meta = BTreeMap::new();
    meta.insert("generator".to_string(), req.kind.name().to_string());
    meta.insert("n".to_string(), n.to_string());
    let m = n * n;
    let rank_in = |dim: usize| -> CliResult<usize> {
        let r = req.rank.unwrap_or(dim);
        if r == 0 || r > dim {
            return Err(CliError::Usage(format!(
                "rank must be in [1, {dim}], got {r}"
            )));
        }
        Ok(r)
    };
    let file = match req.kind {
        GenKind::Pure => StateFile::from_pure(&random_pure_state(m, rng)?),
        GenKind::InputPure => StateFile::from_pure(&random_pure_state(n, rng)?),
        GenKind::Density => {
            let r = rank_in(m)?;
            meta.insert("rank".to_string(), r.to_string());
            StateFile::from_density(&random_density_matrix(m, r, rng)?)
        }
        GenKind::InputDensity => {
            let r = rank_in(n)?;
            meta.insert("rank".to_string(), r.to_string());
            StateFile::from_density(&random_density_matrix(n, r, rng)?)
        }
        GenKind::Phi => StateFile::from_pure(&max_entangled(n)?),
        GenKind::RotatedPhi => {
            let v = haar_unitary(n, rng)?;
            let op = tensor(&ComplexMatrix::identity(n), &v);
            let psi = PureState::normalized(op.apply(max_entangled(n)?.amplitudes()))?;
            StateFile::from_pure(&psi)
        }
        GenKind::Isotropic => {
            let p = req
                .p
                .ok_or_else(|| CliError::Usage("isotropic needs --p".into()))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Usage(format!("p must be in [0, 1], got {p}")));
            }
            meta.insert("p".to_string(), p.to_string());
            let phi = max_entangled(n)?.projector();
            let mixed = ComplexMatrix::identity(m).scale_real((1.0 - p) / m as f64);
            let rho = DensityMatrix::with_tolerances(
                &phi.matrix().scale_real(p) + &mixed,
                &Tolerances::computed(),
            )?;
            StateFile::from_density(&rho)
        }
        GenKind::Schmidt => {
            let theta = req
                .theta
                .ok_or_else(|| CliError::Usage("schmidt needs --theta".into()))?;
            if !theta.is_finite() {
                return Err(CliError::Usage("theta must be finite".into()));
            }
            meta.insert("theta".to_string(), theta.to_string());
            let mut amps = vec![Complex64::new(0.0, 0.0); m];
            amps[0] = Complex64::new(theta.cos(), 0.0);
            amps[n + 1] = Complex64::new(theta.sin(), 0.0);
            StateFile::from_pure(&PureState::normalized(amps)?)
        }
    };
    Ok((file, meta))
}

/// Writes a generated state to `req.out` and verifies it reloads exactly.
pub fn cmd_gen(req: &GenRequest, global: &GlobalOptions) -> CliResult<RunReport> {
    check_local_dim(req.n)?;
    let mut b = Builder::new(global, 1e-15)?;
    let mut rng = Rng::from_seed(global.seed);
    let (file, mut meta) = generate(req, &mut rng)?;
    meta.insert("seed".to_string(), global.seed.to_string());
    let file = file.with_meta(meta);
    file.write(&req.out)?;

    let original = file.to_state(false).map_err(CliError::Numeric)?;
    let reloaded = load_state(&req.out, false)?;
    let gap = match (&original, &reloaded) {
        (LoadedState::Pure(a), LoadedState::Pure(b)) => a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max),
        (a, b) => (a.to_density().matrix() - b.to_density().matrix()).max_abs(),
    };
    b.put("kind", req.kind.name());
    b.put("path", req.out.display().to_string());
    b.put("dim", file.dim);
    b.put("purity", reloaded.to_density().purity());
    b.put("round_trip_error", gap);
    let tol = b.threshold;
    b.check(gap <= tol, || {
        format!("round-trip error {gap:e} exceeds {tol:e}")
    });
    Ok(b.finish())
}

/// Fully entangled fraction of the resource in `state`.
pub fn cmd_fef(
    state: &Path,
    restarts: usize,
    renormalize: bool,
    global: &GlobalOptions,
) -> CliResult<RunReport> {
    let loaded = load_state(state, renormalize)?;
    let n = resource_dim(&loaded, state)?;
    let opts = fef_options(global, restarts)?;
    let mut b = Builder::new(global, 1e-8)?;
    let chi = loaded.to_density();
    let fef = fef_optimize(&chi, &opts)?;
    let nf = n as f64;
    b.put("n", n);
    b.put("value", fef.value);
    b.put("maximizer", matrix_json(&fef.maximizer));
    b.put("singlet_fraction", singlet_fraction(&chi)?);
    b.put("f_max", optimal_fidelity(&chi, &fef)?);
    b.put("diagnostics", &fef);
    let tol = b.threshold;
    let lower = 1.0 / (nf * nf);
    let value = fef.value;
    b.check(value >= lower - tol && value <= 1.0 + tol, || {
        format!("FEF {value} outside [1/n², 1]")
    });
    if let LoadedState::Pure(psi) = &loaded {
        let (closed, _) = fef_pure(psi)?;
        let gap = (closed - value).abs();
        b.put("closed_form", closed);
        b.put("closed_form_gap", gap);
        b.check(gap <= tol, || {
            format!("optimizer differs from the pure-state closed form by {gap:e}")
        });
    }
    Ok(b.finish())
}

/// Exact transmission fidelity of a protocol, optionally with a Monte Carlo
/// estimate when `samples > 0`.
pub fn cmd_fidelity(
    state: &Path,
    protocol: &ProtocolChoice,
    samples: usize,
    restarts: usize,
    renormalize: bool,
    global: &GlobalOptions,
) -> CliResult<RunReport> {
    if samples != 0 && samples < MIN_FIDELITY_SAMPLES {
        return Err(CliError::Usage(format!(
            "--samples must be 0 or at least {MIN_FIDELITY_SAMPLES}"
        )));
    }
    let loaded = load_state(state, renormalize)?;
    let n = resource_dim(&loaded, state)?;
    let opts = fef_options(global, restarts)?;
    let mut b = Builder::new(global, 1e-7)?;
    let chi = loaded.to_density();
    let p = build_protocol(protocol, &chi, n, &opts, &mut b)?;
    let f = transmission_fidelity(&chi, &p)?;
    b.put("n", n);
    b.put("protocol", protocol.label());
    b.put("fidelity", f);
    if let Some(formula) = b.results.get("f_optimal_formula").and_then(Value::as_f64) {
        let gap = (formula - f).abs();
        let tol = b.threshold;
        b.check(gap <= tol, || {
            format!("optimal fidelity differs from formula by {gap:e}")
        });
    }
    if samples > 0 {
        let mut rng = Rng::from_seed(global.seed);
        let est = monte_carlo_fidelity(&chi, &p, samples, &mut rng)?;
        let z = est.z_score(f);
        b.put(
            "monte_carlo",
            json!({
                "mean": est.mean,
                "std_error": est.std_error,
                "samples": est.samples,
                "gap": (est.mean - f).abs(),
                "z": z,
            }),
        );
        b.check(z <= MAX_Z, || {
            format!("Monte Carlo fidelity is {z:.2} standard errors away")
        });
    }
    Ok(b.finish())
}

/// Runs the Bell-measurement protocol on `input` over `resource` and checks
/// it against the closed-form channel and fidelity.
pub fn cmd_simulate(
    resource: &Path,
    input: &Path,
    protocol: &ProtocolChoice,
    samples: usize,
    restarts: usize,
    renormalize: bool,
    global: &GlobalOptions,
) -> CliResult<RunReport> {
    if samples < MIN_FIDELITY_SAMPLES {
        return Err(CliError::Usage(format!(
            "--samples must be at least {MIN_FIDELITY_SAMPLES}"
        )));
    }
    let res = load_state(resource, renormalize)?;
    let n = resource_dim(&res, resource)?;
    let inp = load_state(input, renormalize)?;
    if inp.dim() != n {
        return Err(CliError::Input(format!(
            "{}: input has dimension {}, resource needs {n}",
            input.display(),
            inp.dim()
        )));
    }
    let opts = fef_options(global, restarts)?;
    let mut b = Builder::new(global, 1e-8)?;
    let chi = res.to_density();
    let p = build_protocol(protocol, &chi, n, &opts, &mut b)?;
    let rho_in = inp.to_density();
    let sim = simulate_protocol_mixed_detailed(&ensemble_of(&res)?, &p, &rho_in)?;
    let closed = apply_channel(&chi, &p, &rho_in)?;
    let channel_gap = (sim.aggregate.matrix() - closed.matrix()).frobenius_norm();
    let trace_error = (sim.aggregate.matrix().trace() - 1.0).norm();

    let f = transmission_fidelity(&chi, &p)?;
    let mut rng = Rng::from_seed(global.seed);
    let est = monte_carlo_fidelity(&chi, &p, samples, &mut rng)?;
    let z = est.z_score(f);

    b.put("n", n);
    b.put("protocol", protocol.label());
    b.put("probabilities", &sim.probabilities);
    b.put("output", matrix_json(sim.aggregate.matrix()));
    b.put("channel_gap", channel_gap);
    b.put("route_gap", sim.route_gap);
    b.put("trace_error", trace_error);
    if let LoadedState::Pure(phi) = &inp {
        b.put(
            "output_fidelity",
            sim.aggregate.expectation(phi.amplitudes()),
        );
    }
    b.put("fidelity", f);
    b.put(
        "monte_carlo",
        json!({
            "mean": est.mean,
            "std_error": est.std_error,
            "samples": est.samples,
            "gap": (est.mean - f).abs(),
            "z": z,
        }),
    );
    let tol = b.threshold;
    b.check(channel_gap <= tol, || {
        format!("simulation differs from the closed-form channel by {channel_gap:e}")
    });
    let route_gap = sim.route_gap;
    b.check(route_gap <= tol, || {
        format!("simulation routes differ by {route_gap:e}")
    });
    b.check(trace_error <= 1e-9, || {
        format!("output trace off by {trace_error:e}")
    });
    b.check(z <= MAX_Z, || {
        format!("Monte Carlo fidelity is {z:.2} standard errors away")
    });
    Ok(b.finish())
}

/// Standard vs optimal protocol on one resource.
pub fn cmd_compare(
    state: &Path,
    restarts: usize,
    renormalize: bool,
    global: &GlobalOptions,
) -> CliResult<RunReport> {
    let loaded = load_state(state, renormalize)?;
    resource_dim(&loaded, state)?;
    let opts = fef_options(global, restarts)?;
    let mut b = Builder::new(global, crate::optimal::REPORT_TOLERANCE)?;
    let report = compare(&loaded.to_density(), &opts)?;
    let violations = report.violations_with(b.threshold);
    b.put("n", report.n);
    b.put("singlet_fraction", report.singlet_fraction);
    b.put("fef", report.fef);
    b.put("f_standard", report.f_standard);
    b.put("f_optimal_formula", report.f_optimal_formula);
    b.put("f_optimal_direct", report.f_optimal_direct);
    b.put("advantage", report.advantage);
    b.put("maximizer", matrix_json(&report.fef_diagnostics.maximizer));
    b.put("fef_diagnostics", &report.fef_diagnostics);
    for v in violations {
        b.check(false, || v);
    }
    Ok(b.finish())
}

/// Monte Carlo twirl of a random two-qudit density matrix against the exact
/// `α₁ I + α₂ P`, plus the exact `I ⊗ I` and `P` cases.
pub fn cmd_twirl_check(n: usize, samples: usize, global: &GlobalOptions) -> CliResult<RunReport> {
    check_local_dim(n)?;
    if samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let mut b = Builder::new(global, 1e-12)?;
    let mut rng = Rng::from_seed(global.seed);
    let m = n * n;
    let sigma = random_density_matrix(m, m, &mut rng)?;
    let exact = twirl(sigma.matrix())?;
    let est = monte_carlo_twirl(sigma.matrix(), samples, &mut rng)?;
    let z = est.max_z(&exact.matrix);
    let dev = est.max_abs_deviation(&exact.matrix);
    let max_se = est.std_error.iter().cloned().fold(0.0, f64::max);

    let id = twirl(&ComplexMatrix::identity(m))?;
    let flip = twirl(&flip_operator(n)?)?;
    let exact_gap = [
        (id.alpha1 - 1.0).abs(),
        id.alpha2.abs(),
        flip.alpha1.abs(),
        (flip.alpha2 - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    b.put("n", n);
    b.put("samples", samples);
    b.put("alpha1", exact.alpha1);
    b.put("alpha2", exact.alpha2);
    b.put("max_abs_deviation", dev);
    b.put("max_std_error", max_se);
    b.put("max_z", z);
    b.put("identity_alphas", [id.alpha1, id.alpha2]);
    b.put("flip_alphas", [flip.alpha1, flip.alpha2]);
    b.put("exact_case_error", exact_gap);
    b.check(z <= MAX_Z, || {
        format!("Monte Carlo twirl is {z:.2} standard errors away")
    });
    let tol = b.threshold;
    b.check(exact_gap <= tol, || {
        format!("exact twirl of I⊗I or P off by {exact_gap:e}")
    });
    Ok(b.finish())
}
