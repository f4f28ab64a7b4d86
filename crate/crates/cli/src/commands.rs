use std::path::Path;
use std::time::Instant;

use momentflow_core::bracket::{self, complexify, invariants, jacobi_defect, JACOBI_TOL};
use momentflow_core::flow::{flow_projective, FlowConfig, FlowResult, FlowStatus};
use momentflow_core::moment::{critical_residual, moment, stabilizer_dimension};
use momentflow_core::orbit::{
    closed_orbit_run, compare_real_complex, compare_real_forms, is_distinguished_with, nilsoliton_data, ClosedVerdict,
    FlowSummary, Verdict,
};
use momentflow_core::{catalog, par, random, ActionModel, Bracket, Error, Execution, GroupTag};
use nalgebra::DVector;

use crate::args::{BatchRun, Command, GroupArg, Options};
use crate::document::{BracketDocument, DocumentError};
use crate::report::{
    rows, CheckOutcome, ConfigEcho, FlowOutcome, InputRecord, KempfNessOutcome, Outcome, ResultStatus, RunReport,
    RunResult, Timing, Trajectory,
};

/// Environment variable capping the worker count of batch runs.
pub const THREADS_ENV: &str = "MOMENTFLOW_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{origin}: {err}")]
    Document { origin: String, err: DocumentError },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Document { .. } => 2,
            CliError::Io(_) => 4,
        }
    }
}

pub fn exit_code(status: ResultStatus) -> i32 {
    match status {
        ResultStatus::Ok | ResultStatus::Skipped => 0,
        ResultStatus::InputError => 2,
        ResultStatus::NotConverged => 3,
        ResultStatus::InternalError => 4,
    }
}

pub fn flow_config(opts: &Options) -> Result<FlowConfig, CliError> {
    let mut cfg = FlowConfig::default();
    if let Some(x) = opts.tol_grad {
        cfg.tol_grad = x;
    }
    if let Some(x) = opts.tol_residual {
        cfg.tol_residual = x;
    }
    if let Some(x) = opts.max_time {
        cfg.max_flow_time = x;
    }
    if let Some(x) = opts.record_stride {
        cfg.record_stride = x;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn config_echo(opts: &Options, cfg: &FlowConfig) -> ConfigEcho {
    ConfigEcho {
        group: match opts.group {
            GroupArg::Gl => "gl".into(),
            GroupArg::Sl => "sl".into(),
        },
        complexify: opts.complexify,
        kempf_ness: opts.kempf_ness,
        perturb_seed: opts.perturb_seed,
        seed: opts.seed,
        allow_non_lie: opts.allow_non_lie,
        trajectory: opts.trajectory,
        flow: cfg.clone(),
    }
}

/// A parsed input with its provenance record.
pub struct Input {
    pub record: InputRecord,
    pub doc: BracketDocument,
}

/// Reads `catalog:NAME` or a bracket file.
pub fn load_input(source: &str) -> Result<Input, CliError> {
    if let Some(name) = source.strip_prefix("catalog:") {
        let entry = catalog::lookup(name)
            .ok_or_else(|| CliError::Usage(format!("unknown catalog entry {name:?}; try `momentflow catalog`")))?;
        let doc = BracketDocument::from_real(&entry.bracket, Some(entry.name.to_string()));
        let record = InputRecord::new(source, doc.name.clone(), doc.to_json().as_bytes());
        return Ok(Input { record, doc });
    }
    let bytes = std::fs::read(source).map_err(|e| CliError::Usage(format!("cannot read {source}: {e}")))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Usage(format!("{source}: not UTF-8")))?;
    let doc = BracketDocument::parse(&text).map_err(|err| CliError::Document {
        origin: source.to_string(),
        err,
    })?;
    Ok(Input {
        record: InputRecord::new(source, doc.name.clone(), &bytes),
        doc,
    })
}

fn status_of(err: &Error) -> ResultStatus {
    match err {
        Error::ZeroVector(_)
        | Error::NotLie { .. }
        | Error::BadIndex { .. }
        | Error::UnsupportedModel(_)
        | Error::ComplexInput
        | Error::NotNilpotent
        | Error::InvalidConfig(_) => ResultStatus::InputError,
        Error::NotConverged(_) | Error::NotCritical { .. } => ResultStatus::NotConverged,
        Error::DimensionMismatch { .. } | Error::NotUnit { .. } | Error::SingularGroupElement => {
            ResultStatus::InternalError
        }
    }
}

fn failed(input: &str, status: ResultStatus, message: String) -> RunResult {
    RunResult {
        input: input.to_string(),
        status,
        error: Some(message),
        outcome: None,
    }
}

fn from_core(input: &str, r: Result<(Outcome, ResultStatus), Error>) -> RunResult {
    match r {
        Ok((outcome, status)) => RunResult {
            input: input.to_string(),
            status,
            error: None,
            outcome: Some(outcome),
        },
        Err(e) => failed(input, status_of(&e), e.to_string()),
    }
}

fn trajectory(res: &FlowResult, wanted: bool) -> Option<Trajectory> {
    wanted.then(|| Trajectory {
        times: res.times.clone(),
        f: res.f_history.clone(),
        gradnorm: res.gradnorm_history.clone(),
        norm_sq: res.norm_sq_history.clone(),
    })
}

fn perturb_real(mu: &Bracket<f64>, seed: Option<u64>) -> Result<Bracket<f64>, Error> {
    match seed {
        None => Ok(mu.clone()),
        Some(s) => {
            let g = random::well_conditioned_gl(&mut random::seeded(s), mu.n());
            bracket::group_act(&g, mu)
        }
    }
}

fn flow_status(converged: bool) -> ResultStatus {
    if converged {
        ResultStatus::Ok
    } else {
        ResultStatus::NotConverged
    }
}

fn run_flow(doc: &BracketDocument, opts: &Options, cfg: &FlowConfig) -> Result<(Outcome, ResultStatus), Error> {
    let complex = doc.is_complex() || opts.complexify;
    if opts.kempf_ness {
        if opts.group != GroupArg::Sl || complex {
            return Err(Error::UnsupportedModel(
                "--kempf-ness needs --group sl and a real bracket".into(),
            ));
        }
        let mu = perturb_real(&doc.real_bracket().expect("real document"), opts.perturb_seed)?;
        let (report, res) = closed_orbit_run(&mu, cfg)?;
        let status = flow_status(report.verdict != ClosedVerdict::NotDetermined);
        let limit = Bracket::from_vector(mu.n(), &res.limit_point)?;
        let outcome = KempfNessOutcome {
            report,
            limit: BracketDocument::from_real(&limit, None),
            trajectory: trajectory(&res, opts.trajectory),
        };
        return Ok((Outcome::KempfNess(Box::new(outcome)), status));
    }
    if complex {
        if opts.group == GroupArg::Sl {
            return Err(Error::UnsupportedModel("the complex model is GL_n(C) only".into()));
        }
        return run_complex_flow(doc, opts, cfg);
    }
    let mu = perturb_real(&doc.real_bracket().expect("real document"), opts.perturb_seed)?;
    if opts.group == GroupArg::Sl {
        return run_sl_projective(&mu, opts, cfg);
    }
    let v = is_distinguished_with(&mu, cfg, opts.allow_non_lie)?;
    let nilsoliton = (v.verdict == Verdict::Distinguished && bracket::is_nilpotent(&v.limit_bracket))
        .then(|| nilsoliton_data(&v.limit_bracket, cfg.tol_residual).ok())
        .flatten()
        .map(Into::into);
    let outcome = FlowOutcome {
        group: GroupTag::GlReal,
        verdict: format!("{:?}", v.verdict),
        certificate: v.certificate.clone(),
        mu_star_value: None,
        invariants_consistent: v.invariants_checked.then_some(v.invariants_match_start),
        start_invariants: v.start_invariants.clone(),
        limit_invariants: v.limit_invariants.clone(),
        nilsoliton,
        summary: FlowSummary::from(&v.flow),
        limit: BracketDocument::from_real(&v.limit_bracket, None),
        trajectory: trajectory(&v.flow, opts.trajectory),
    };
    Ok((
        Outcome::Flow(Box::new(outcome)),
        flow_status(v.verdict == Verdict::Distinguished),
    ))
}

fn certified(res: &FlowResult, cfg: &FlowConfig) -> bool {
    res.status == FlowStatus::Converged && res.certificate.as_ref().is_some_and(|c| c.residual < cfg.tol_residual)
}

fn run_sl_projective(mu: &Bracket<f64>, opts: &Options, cfg: &FlowConfig) -> Result<(Outcome, ResultStatus), Error> {
    let start_invariants = match invariants(mu) {
        Ok(inv) => Some(inv),
        Err(e @ Error::NotLie { .. }) if !opts.allow_non_lie => return Err(e),
        Err(_) => None,
    };
    let model = ActionModel::sl_real(mu.n());
    let res = flow_projective(&model, &mu.to_vector(), cfg)?;
    let limit = Bracket::from_vector(mu.n(), &res.limit_point)?;
    let limit_invariants = start_invariants.as_ref().and_then(|_| invariants(&limit).ok());
    let consistent = start_invariants.as_ref().map(|s| Some(s) == limit_invariants.as_ref());
    // m̃_sl = 0 at the limit: a minimal vector, where the residual ratio is 0/0
    let minimal = res.status == FlowStatus::Converged
        && res
            .certificate
            .as_ref()
            .is_some_and(|c| c.f_value.sqrt() < cfg.tol_grad);
    let ok = (minimal || certified(&res, cfg)) && consistent != Some(false);
    let verdict = match (ok, minimal) {
        (true, true) => "Minimal",
        (true, false) => "Distinguished",
        _ => "NotDetermined",
    };
    let outcome = FlowOutcome {
        group: GroupTag::SlReal,
        verdict: verdict.into(),
        certificate: res.certificate.clone(),
        mu_star_value: None,
        start_invariants,
        limit_invariants,
        invariants_consistent: consistent,
        nilsoliton: None,
        summary: FlowSummary::from(&res),
        limit: BracketDocument::from_real(&limit, None),
        trajectory: trajectory(&res, opts.trajectory),
    };
    Ok((Outcome::Flow(Box::new(outcome)), flow_status(ok)))
}

fn complex_start(doc: &BracketDocument) -> (DVector<f64>, ActionModel) {
    match doc.real_bracket() {
        Some(mu) => {
            let (c, model) = complexify(&mu);
            (c.to_realified(), model)
        }
        None => (doc.complex_bracket().to_realified(), ActionModel::gl_complex(doc.n)),
    }
}

fn run_complex_flow(doc: &BracketDocument, opts: &Options, cfg: &FlowConfig) -> Result<(Outcome, ResultStatus), Error> {
    let (mut w, model) = complex_start(doc);
    if let Some(s) = opts.perturb_seed {
        let g = random::well_conditioned_gl_complex(&mut random::seeded(s), doc.n);
        w = model.transport(&g, &w)?;
    }
    let jd = jacobi_defect(&momentflow_core::ComplexBracket::from_realified(doc.n, &w)?);
    let sup = w.amax();
    if jd > JACOBI_TOL * sup.max(1.0).powi(2) && !opts.allow_non_lie {
        return Err(Error::NotLie { defect: jd });
    }
    let res = flow_projective(&model, &w, cfg)?;
    let ok = certified(&res, cfg);
    let limit = momentflow_core::ComplexBracket::from_realified(doc.n, &res.limit_point)?;
    let outcome = FlowOutcome {
        group: GroupTag::GlComplexRealified,
        verdict: if ok { "Distinguished" } else { "NotDetermined" }.into(),
        mu_star_value: res.certificate.as_ref().map(|c| 4.0 * c.f_value),
        certificate: res.certificate.clone(),
        start_invariants: None,
        limit_invariants: None,
        invariants_consistent: None,
        nilsoliton: None,
        summary: FlowSummary::from(&res),
        limit: BracketDocument::from_complex(&limit, None),
        trajectory: trajectory(&res, opts.trajectory),
    };
    Ok((Outcome::Flow(Box::new(outcome)), flow_status(ok)))
}

fn run_check(doc: &BracketDocument, opts: &Options, cfg: &FlowConfig) -> Result<(Outcome, ResultStatus), Error> {
    let complex = doc.is_complex() || opts.complexify;
    if complex && opts.group == GroupArg::Sl {
        return Err(Error::UnsupportedModel("the complex model is GL_n(C) only".into()));
    }
    let real = if complex { None } else { doc.real_bracket() };
    let (v, model, defect, sup) = match &real {
        Some(mu) => {
            let model = match opts.group {
                GroupArg::Gl => ActionModel::gl_real(doc.n),
                GroupArg::Sl => ActionModel::sl_real(doc.n),
            };
            (mu.to_vector(), model, jacobi_defect(mu), mu.sup_norm())
        }
        None => {
            let (w, model) = complex_start(doc);
            let c = doc.complex_bracket();
            (w, model, jacobi_defect(&c), c.sup_norm())
        }
    };
    let lie = defect <= JACOBI_TOL * sup.max(1.0).powi(2);
    if !lie && !opts.allow_non_lie {
        return Err(Error::NotLie { defect });
    }
    let cert = critical_residual(&model, &v)?;
    let mv = moment(&model, &v)?;
    let critical = cert.residual < cfg.tol_residual;
    let inv = real.as_ref().filter(|_| lie).map(invariants).transpose()?;
    let complex_invariants = match (&real, doc.real_bracket()) {
        (None, Some(mu)) if lie => Some(invariants(&mu)?.complexified()),
        _ => None,
    };
    let sl_ratio = match &real {
        Some(mu) => {
            let m = moment(&ActionModel::sl_real(doc.n), &mu.to_vector())?;
            Some(m.norm_sq.sqrt() / m.vector_norm_sq)
        }
        None => None,
    };
    let nilsoliton = match (&real, &inv) {
        (Some(mu), Some(i)) if i.nilpotent && critical && opts.group == GroupArg::Gl => {
            nilsoliton_data(mu, cfg.tol_residual).ok().map(Into::into)
        }
        _ => None,
    };
    let stab = stabilizer_dimension(&model, &v)?;
    let outcome = CheckOutcome {
        group: model.group(),
        jacobi_defect: defect,
        lie,
        invariants: inv,
        complex_invariants,
        moment: rows(&mv.matrix),
        critical,
        sl_moment_ratio: sl_ratio,
        sl_minimal: sl_ratio.map(|r| r < cfg.tol_grad),
        stabilizer_dim: stab,
        orbit_dim: model.algebra_basis().len() - stab,
        certificate: cert,
        nilsoliton,
    };
    Ok((Outcome::Check(Box::new(outcome)), ResultStatus::Ok))
}

fn run_compare(
    a: &BracketDocument,
    b: Option<&BracketDocument>,
    opts: &Options,
    cfg: &FlowConfig,
) -> Result<(Outcome, ResultStatus), Error> {
    let mu1 = a.real_bracket().ok_or(Error::ComplexInput)?;
    match b {
        None => {
            let r = compare_real_complex(&mu1, cfg, opts.seed)?;
            let converged = r.complex_embedded.status == FlowStatus::Converged
                && r.complex_perturbed.status == FlowStatus::Converged
                && r.real_verdict == Verdict::Distinguished;
            Ok((Outcome::RealComplex(Box::new(r)), flow_status(converged)))
        }
        Some(b) => {
            let mu2 = b.real_bracket().ok_or(Error::ComplexInput)?;
            let r = compare_real_forms(&mu1, &mu2, cfg)?;
            let decided = !r.verdicts.0.contains("NotDetermined") && !r.verdicts.1.contains("NotDetermined");
            Ok((Outcome::RealForms(Box::new(r)), flow_status(decided)))
        }
    }
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse().ok())
}

enum BatchItem {
    Doc(Input),
    Broken(String, String),
}

fn batch_items(target: &str) -> Result<Vec<BatchItem>, CliError> {
    if target == "catalog" {
        return catalog::all()
            .into_iter()
            .map(|e| load_input(&format!("catalog:{}", e.name)).map(BatchItem::Doc))
            .collect();
    }
    if let Some(list) = target.strip_prefix("catalog:") {
        return list
            .split(',')
            .map(|name| load_input(&format!("catalog:{}", name.trim())).map(BatchItem::Doc))
            .collect();
    }
    let dir = Path::new(target);
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "batch target {target:?} is neither `catalog`, `catalog:NAMES` nor a directory"
        )));
    }
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot list {target}: {e}")))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files
        .into_iter()
        .map(|p| {
            let source = p.to_string_lossy().to_string();
            match load_input(&source) {
                Ok(input) => BatchItem::Doc(input),
                Err(e) => BatchItem::Broken(source, e.to_string()),
            }
        })
        .collect())
}

/// Runs a report-producing command. `catalog` is handled by the binary.
pub fn execute(command: &Command, opts: &Options) -> Result<RunReport, CliError> {
    let cfg = flow_config(opts)?;
    let started = Instant::now();
    let (name, inputs, results) = match command {
        Command::Flow { input } | Command::Check { input } => {
            let inp = load_input(input)?;
            let r = if matches!(command, Command::Flow { .. }) {
                run_flow(&inp.doc, opts, &cfg)
            } else {
                run_check(&inp.doc, opts, &cfg)
            };
            let name = if matches!(command, Command::Flow { .. }) {
                "flow"
            } else {
                "check"
            };
            (name, vec![inp.record], vec![from_core(input, r)])
        }
        Command::Compare { input, other } => {
            let a = load_input(input)?;
            let b = other.as_deref().map(load_input).transpose()?;
            let r = run_compare(&a.doc, b.as_ref().map(|b| &b.doc), opts, &cfg);
            let mut records = vec![a.record];
            records.extend(b.map(|b| b.record));
            ("compare", records, vec![from_core(input, r)])
        }
        Command::Batch { target, run } => {
            let items = batch_items(target)?;
            let results = par::with_threads(threads_from_env(), || {
                par::map(Execution::Auto, &items, |item| match item {
                    BatchItem::Broken(source, msg) => failed(source, ResultStatus::InputError, msg.clone()),
                    BatchItem::Doc(inp) => {
                        let source = inp.record.source.as_str();
                        let r = match run {
                            BatchRun::Flow => run_flow(&inp.doc, opts, &cfg),
                            BatchRun::Check => run_check(&inp.doc, opts, &cfg),
                        };
                        let mut res = from_core(source, r);
                        if res.error.as_deref().is_some_and(|e| e.contains("zero")) {
                            res.status = ResultStatus::Skipped;
                        }
                        res
                    }
                })
            });
            let records = items
                .iter()
                .filter_map(|i| match i {
                    BatchItem::Doc(inp) => Some(inp.record.clone()),
                    BatchItem::Broken(..) => None,
                })
                .collect();
            ("batch", records, results)
        }
        Command::Catalog { .. } => return Err(CliError::Usage("catalog produces no run report".into())),
    };
    Ok(RunReport {
        tool: "momentflow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        config: config_echo(opts, &cfg),
        inputs,
        results,
        timing: opts.timing.then(|| Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
        }),
    })
}
