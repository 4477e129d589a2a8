use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, Context};
use fifonet_core::certify::{
    self, CertMethod, IterationOptions, RoaCertificate, RoaOptions, SampleOptions, DEFAULT_ALPHA, DEFAULT_ORBIT_TOL,
};
use fifonet_core::dynamics::{classify, flows, DEFAULT_MARGIN_TOL};
use fifonet_core::equilibrium::{self, Feasibility};
use fifonet_core::error::{CertifyError, ModelError, SimulationError};
use fifonet_core::simulate::{self, Integration, MeteringSignal, Method, DEFAULT_DT};
use fifonet_core::{Field, Network};
use serde_json::{json, Value};

use crate::manifest::{RunManifest, ENV_DT, ENV_MARGIN_TOL, ENV_ORBIT_TOL, ENV_SAMPLE_TOL};
use crate::{
    AuditArgs, CertMethodArg, CertifyArgs, FieldArg, MethodArg, PeriodicArgs, SignalArgs, SimulateArgs, VerifyArgs,
};

pub const SAMPLE_TOL: f64 = 1e-3;

/// JSON for stdout and the exit code to finish with.
pub struct Report {
    pub json: Value,
    pub code: u8,
}

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::StateDimension { .. }
        | ModelError::InputDimension { .. }
        | ModelError::DensityOutOfRange { .. }
        | ModelError::NegativeInput { .. } => 2,
        _ => 1,
    }
}

fn sim_code(e: &SimulationError) -> u8 {
    match e {
        SimulationError::Model(m) => model_code(m),
        SimulationError::Signal(_) | SimulationError::BadStep(_) | SimulationError::BadHorizon(_) => 2,
        _ => 1,
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure {
            code: model_code(&e),
            error: e.into(),
        }
    }
}

impl From<SimulationError> for Failure {
    fn from(e: SimulationError) -> Self {
        Failure {
            code: sim_code(&e),
            error: e.into(),
        }
    }
}

impl From<CertifyError> for Failure {
    fn from(e: CertifyError) -> Self {
        let code = match &e {
            CertifyError::Model(m) => model_code(m),
            CertifyError::Simulation(s) => sim_code(s),
            CertifyError::PointDimension { .. } | CertifyError::BadStep(_) => 2,
            _ => 1,
        };
        Failure { code, error: e.into() }
    }
}

fn ok(json: Value, manifest: &mut RunManifest) -> Result<Report, Failure> {
    finish(json, 0, manifest)
}

fn finish(mut json: Value, code: u8, manifest: &mut RunManifest) -> Result<Report, Failure> {
    json["manifest"] = serde_json::to_value(manifest.finish()).expect("manifest serializes");
    Ok(Report { json, code })
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)
}

/// Loads a network and records its hash; `validated` also enforces the
/// modelling assumptions.
fn load(path: &Path, manifest: &mut RunManifest, validated: bool) -> Result<Network, Failure> {
    let text = read(path)?;
    manifest.hash_network(text.as_bytes());
    let net = Network::from_json(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(input)?;
    if validated {
        let report = net.validate();
        if !report.pass {
            let first = &report.violations[0];
            return Err(input(anyhow!(
                "network fails validation ({} violations, first: {:?} on {:?}: {}); run `fifonet validate`",
                report.violations.len(),
                first.assumption,
                first.subject,
                first.detail
            )));
        }
    }
    Ok(net)
}

fn load_signal(args: &SignalArgs) -> Result<MeteringSignal, Failure> {
    match (&args.u, &args.schedule) {
        (Some(u), _) => Ok(MeteringSignal::constant(u.0.clone())),
        (None, Some(path)) => MeteringSignal::from_schedule_json(&read(path)?)
            .with_context(|| format!("in {}", path.display()))
            .map_err(input),
        (None, None) => Err(input(anyhow!("either --u or --schedule is required"))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(input)
}

fn link_ids(net: &Network) -> Vec<&str> {
    net.links().iter().map(|l| l.id.as_str()).collect()
}

pub fn validate(path: &Path) -> Result<Report, Failure> {
    let mut manifest = RunManifest::start("validate");
    let net = load(path, &mut manifest, false)?;
    let report = net.validate();
    for v in &report.violations {
        log::warn!("{:?} {:?}: {}", v.assumption, v.subject, v.detail);
    }
    let code = if report.pass { 0 } else { 1 };
    finish(
        serde_json::to_value(&report).expect("report serializes"),
        code,
        &mut manifest,
    )
}

pub fn equilibrium(path: &Path, u: &[f64]) -> Result<Report, Failure> {
    let mut manifest = RunManifest::start("equilibrium");
    let net = load(path, &mut manifest, true)?;
    let result = equilibrium::analyze(&net, u)?;
    let code = if result.class == Feasibility::Infeasible {
        log::error!("input is infeasible; see slacks");
        1
    } else {
        0
    };
    let json = json!({
        "links": link_ids(&net),
        "u": u,
        "flows": result.flows,
        "state": result.state,
        "class": result.class,
        "slacks": result.slacks,
    });
    finish(json, code, &mut manifest)
}

pub fn simulate(args: &SimulateArgs) -> Result<Report, Failure> {
    let mut manifest = RunManifest::start("simulate");
    let net = load(&args.network, &mut manifest, true)?;
    let signal = load_signal(&args.signal)?;
    let dt = manifest.resolve(args.dt, ENV_DT, DEFAULT_DT).map_err(input)?;
    let x0 = args
        .x0
        .as_ref()
        .map_or_else(|| vec![0.0; net.num_links()], |f| f.0.clone());
    let method = match args.method {
        MethodArg::Euler => Method::Euler,
        MethodArg::Rk4 => Method::Rk4,
    };
    let field = match args.field {
        FieldArg::F => Field::Fifo,
        FieldArg::H => Field::Monotone,
    };
    let opts = Integration::new(args.t_end, dt)
        .method(method)
        .field(field)
        .stride(args.stride);
    let traj = simulate::integrate(&net, &x0, &signal, &opts)?;

    if let Some(out) = &args.out {
        let w = create(out)?;
        traj.write_csv(&net, w)
            .with_context(|| format!("writing {}", out.display()))
            .map_err(input)?;
        manifest.write_sidecar(out).context("writing manifest").map_err(input)?;
    }
    let final_state = traj.final_state();
    let json = json!({
        "links": link_ids(&net),
        "t_end": traj.final_time(),
        "dt": traj.dt,
        "method": traj.method,
        "field": traj.field,
        "rows": traj.times.len(),
        "final_state": final_state,
        "classification": classify(&net, final_state, DEFAULT_MARGIN_TOL),
        "max_clamp": traj.max_clamp,
        "out": args.out,
    });
    ok(json, &mut manifest)
}

/// `<stem>.orbit.csv` next to the certificate.
fn orbit_path(cert: &Path) -> std::path::PathBuf {
    let stem = cert
        .file_stem()
        .map_or_else(|| "certificate".into(), |s| s.to_string_lossy().into_owned());
    cert.with_file_name(format!("{stem}.orbit.csv"))
}

pub fn certify(args: &CertifyArgs) -> Result<Report, Failure> {
    let mut manifest = RunManifest::start("certify");
    let net = load(&args.network, &mut manifest, true)?;
    let signal = load_signal(&args.signal)?;
    signal.check(&net)?;
    let dt = manifest.resolve(args.dt, ENV_DT, DEFAULT_DT).map_err(input)?;
    let margin_tol = manifest
        .resolve(args.margin_tol, ENV_MARGIN_TOL, DEFAULT_MARGIN_TOL)
        .map_err(input)?;
    let ubar = args.ubar.as_ref().map_or_else(|| signal.upper_bound(), |f| f.0.clone());
    net.check_input(&ubar)?;
    certify::check_dominated(&net, &signal, &ubar)?;

    let mut iteration = None;
    let point = match args.method {
        CertMethodArg::VectorField => {
            let y = match &args.y {
                Some(y) => y.0.clone(),
                None => equilibrium::equilibrium_state(&net, &ubar)?,
            };
            certify::check_vector_field_certificate(&net, &y, &ubar)?
        }
        CertMethodArg::Iteration => {
            let opts = IterationOptions {
                alpha: args.alpha.unwrap_or(DEFAULT_ALPHA),
                margin_tol,
                ..Default::default()
            };
            let (point, record) = certify::iteration_certificate(&net, &ubar, &opts, args.horizon, dt)?;
            log::info!("iteration: {} steps, N = {}", record.iterations, record.n);
            iteration = Some(record);
            point
        }
        CertMethodArg::UserSupplied => {
            let y = args
                .y
                .as_ref()
                .ok_or_else(|| input(anyhow!("--method user-supplied needs --y")))?;
            certify::user_supplied_certificate(&net, &y.0, &ubar, args.horizon, dt)?
        }
    };
    debug_assert!(matches!(
        (args.method, point.method),
        (CertMethodArg::VectorField, CertMethod::VectorField)
            | (CertMethodArg::Iteration, CertMethod::Iteration)
            | (CertMethodArg::UserSupplied, CertMethod::UserSupplied)
    ));

    let opts = RoaOptions {
        dt,
        margin_tol,
        ..Default::default()
    };
    let (mut cert, orbit) = certify::certify_roa(&net, &signal, &point, &opts)?;
    if let Some(orbit) = orbit {
        let path = orbit_path(&args.out);
        orbit
            .write_csv(&net, create(&path)?)
            .context("writing orbit")
            .map_err(input)?;
        if let certify::Attractor::PeriodicOrbit { orbit_file, .. } = &mut cert.attractor {
            *orbit_file = Some(path.display().to_string());
        }
    }

    let mut doc = serde_json::to_value(&cert).expect("certificate serializes");
    doc["manifest"] = serde_json::to_value(manifest.finish()).expect("manifest serializes");
    let text = serde_json::to_string_pretty(&doc).expect("certificate serializes");
    std::fs::write(&args.out, text + "\n")
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(input)?;

    let json = json!({
        "certificate": cert,
        "iteration": iteration,
        "out": args.out,
    });
    ok(json, &mut manifest)
}

pub fn verify_roa(args: &VerifyArgs) -> Result<Report, Failure> {
    let mut manifest = RunManifest::start("verify-roa");
    manifest.seed = Some(args.seed);
    let net = load(&args.network, &mut manifest, true)?;
    let cert: RoaCertificate = serde_json::from_str(&read(&args.cert)?)
        .with_context(|| format!("malformed certificate {}", args.cert.display()))
        .map_err(input)?;
    let dt = manifest.resolve(args.dt, ENV_DT, cert.params.dt).map_err(input)?;
    let tol = manifest.resolve(args.tol, ENV_SAMPLE_TOL, SAMPLE_TOL).map_err(input)?;
    let opts = SampleOptions {
        n: args.samples,
        seed: args.seed,
        horizon: args.horizon,
        dt,
        tol,
        ..Default::default()
    };
    let report = certify::sample_verify(&net, &cert, &opts)?;
    for f in &report.failures {
        log::error!("sample {} from {:?} ends {:e} away", f.index, f.start, f.distance);
    }
    let code = if report.all_passed() { 0 } else { 1 };
    let json = json!({
        "pass": report.all_passed(),
        "n": report.n,
        "passed": report.passed,
        "worst_distance": report.worst_distance,
        "failures": report.failures,
        "tol": tol,
        "horizon": args.horizon,
        "attractor": cert.attractor,
    });
    finish(json, code, &mut manifest)
}

pub fn periodic(args: &PeriodicArgs) -> Result<Report, Failure> {
    let mut manifest = RunManifest::start("periodic");
    let net = load(&args.network, &mut manifest, true)?;
    let signal = MeteringSignal::from_schedule_json(&read(&args.schedule)?).map_err(input)?;
    let dt = manifest.resolve(args.dt, ENV_DT, DEFAULT_DT).map_err(input)?;
    let tol = manifest
        .resolve(args.tol, ENV_ORBIT_TOL, DEFAULT_ORBIT_TOL)
        .map_err(input)?;
    let orbit = simulate::find_periodic_orbit(&net, &signal, dt, tol, args.max_iters)?;
    if let Some(out) = &args.out {
        orbit
            .write_csv(&net, create(out)?)
            .context("writing orbit")
            .map_err(input)?;
        manifest.write_sidecar(out).context("writing manifest").map_err(input)?;
    }
    let json = json!({
        "links": link_ids(&net),
        "period": orbit.period,
        "dt": orbit.dt,
        "gap": orbit.gap,
        "iterations": orbit.iterations,
        "closure_error": orbit.closure_error(),
        "feasibility": orbit.feasibility,
        "initial_state": orbit.states[0],
        "samples": orbit.states.len(),
        "out": args.out,
    });
    ok(json, &mut manifest)
}

pub fn audit(args: &AuditArgs) -> Result<Report, Failure> {
    let mut manifest = RunManifest::start("audit");
    let net = load(&args.network, &mut manifest, true)?;
    let margin_tol = manifest
        .resolve(args.margin_tol, ENV_MARGIN_TOL, DEFAULT_MARGIN_TOL)
        .map_err(input)?;
    let (x, u) = (&args.point.0, &args.u.0);
    net.check_state(x)?;
    net.check_input(u)?;
    let c = classify(&net, x, margin_tol);
    let f = flows(&net, x, u, Field::Fifo);
    let links: Vec<Value> = net
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            json!({
                "id": l.id,
                "regime": c.links[i],
                "demand": f.demand[i],
                "outflow": f.outflow[i],
                "inflow": f.inflow[i],
            })
        })
        .collect();
    let json = json!({
        "point": x,
        "u": u,
        "residual": equilibrium::residual(&net, x, u),
        "classification": c.domain,
        "margin": c.margin,
        "interior": c.interior,
        "links": links,
    });
    ok(json, &mut manifest)
}
