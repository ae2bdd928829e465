use crate::config::{Overrides, Settings};
use crate::error::{model_kind, CliError};
use crate::io::{self, Series};
use crate::manifest::{ErrorSummary, LayerSummary, RunManifest, TransformSummary};
use crate::{BuildArgs, CompareArgs, InputArgs, InterpKind, Mode, ModelArgs, SimulateArgs, SolverArgs, SweepArgs, SystemKind, TuningArgs};
use dynn::dynn::{build_dynn, DynnParams};
use dynn::oracle::lsim_exact;
use dynn::preprocess::{preprocess_lti, PreprocessOptions, TransformedLti};
use dynn::simulate::{
    derive_input_signal, forward_pass_stepped, forward_pass_whole, DynnSimulation, ForwardConfig, InputSignal,
    Interpolation, SolverConfig,
};
use dynn::systems::{
    make_conditioning_ladder, make_convdiff2d, make_diffusion2d, make_mixed_cluster_system, sine_inputs,
    standard_time_grid, GridSpec, SampledInput,
};
use dynn::StateSpace;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn overrides(tuning: Option<&TuningArgs>, solver: Option<&SolverArgs>) -> Overrides {
    Overrides {
        rtol: solver.and_then(|s| s.rtol),
        atol: solver.and_then(|s| s.atol),
        layers: tuning.and_then(|t| t.layers),
        seed: tuning.and_then(|t| t.seed),
        clustering: tuning.and_then(|t| t.clustering.clone()),
        max_cond: tuning.and_then(|t| t.max_cond),
    }
}

fn manifest_path(explicit: &Option<PathBuf>, out: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.with_extension("manifest.json"))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

struct Model {
    ss: StateSpace,
    default_input: Option<SampledInput>,
    source: String,
}

fn generate(kind: SystemKind, args: &ModelArgs) -> Result<Model, CliError> {
    let g = &args.generator;
    let (ss, input) = match kind {
        SystemKind::Diffusion2d => {
            let (ss, u) = make_diffusion2d(&GridSpec::periodic(g.n, g.length), g.diffusivity.unwrap_or(0.8))?;
            (ss, Some(u))
        }
        SystemKind::Convdiff2d => {
            let grid = GridSpec::channel(g.n, g.length);
            let (ss, u) = make_convdiff2d(&grid, g.diffusivity.unwrap_or(1.4), g.vx, g.vy)?;
            (ss, Some(u))
        }
        SystemKind::Ladder => (make_conditioning_ladder(g.system_seed), None),
        SystemKind::Mixed => (make_mixed_cluster_system(g.system_seed), None),
    };
    let default_input = input.or_else(|| Some(sine_inputs(ss.inputs())));
    Ok(Model {
        ss,
        default_input,
        source: format!("{kind:?}").to_lowercase(),
    })
}

fn load_model(args: &ModelArgs) -> Result<Option<Model>, CliError> {
    match (&args.model, args.system) {
        (Some(path), _) => Ok(Some(Model {
            ss: io::read_model(path)?,
            default_input: None,
            source: display(path),
        })),
        (None, Some(kind)) => generate(kind, args).map(Some),
        (None, None) => Ok(None),
    }
}

fn require_model(args: &ModelArgs) -> Result<Model, CliError> {
    load_model(args)?.ok_or_else(|| CliError::Usage("either --model or --system is required".into()))
}

fn preprocess(ss: &StateSpace, settings: &Settings, layers: usize) -> Result<TransformedLti, dynn::Error> {
    preprocess_lti(
        ss,
        &PreprocessOptions {
            layers,
            seed: settings.seed,
            max_cond: settings.max_cond,
        },
    )
}

/// Transformation and network, with conditioning warnings collected.
fn convert(ss: &StateSpace, settings: &Settings, manifest: &mut RunManifest) -> Result<DynnParams, CliError> {
    let tr = preprocess(ss, settings, settings.layers)?;
    for w in &tr.warnings {
        eprintln!("warning: {w}");
    }
    manifest.warnings.extend(tr.warnings.iter().cloned());
    if tr.cond_t > settings.max_cond && !tr.warnings.iter().any(|w| w.contains("cond")) {
        let w = format!("cond_t = {:.4e} exceeds threshold {}", tr.cond_t, settings.max_cond);
        eprintln!("warning: {w}");
        manifest.warnings.push(w);
    }
    manifest.transform = Some(TransformSummary::of(&tr));
    let params = build_dynn(&tr)?;
    manifest.layer_summary = Some(LayerSummary::of(&params));
    Ok(params)
}

pub fn build(config: Option<&Path>, args: &BuildArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let settings = Settings::resolve(config, &overrides(Some(&args.tuning), None))?;
    let model = require_model(&args.model)?;
    let mut manifest = RunManifest::new("build", &settings);
    manifest.inputs.insert("model".into(), model.source.clone());
    let params = convert(&model.ss, &settings, &mut manifest)?;
    io::write_text(&args.out, &params.to_json())?;
    manifest.outputs.insert("params".into(), display(&args.out));
    if let Some(path) = &args.write_model {
        io::write_text(path, &model.ss.to_json())?;
        manifest.outputs.insert("model".into(), display(path));
    }
    manifest.seconds = start.elapsed().as_secs_f64();
    let mpath = manifest_path(&args.manifest, &args.out);
    manifest.write(&mpath)?;
    let summary = manifest.layer_summary.as_ref().expect("set by convert");
    println!(
        "wrote {}: {} layers, {} first-order and {} second-order neurons, cond_t {:.6e}",
        display(&args.out),
        summary.layers,
        summary.first_order,
        summary.second_order,
        manifest.transform.as_ref().map_or(f64::NAN, |t| t.cond_t)
    );
    Ok(())
}

/// Sampled input, its interpolation, the simulation span and output grid.
struct RunInput {
    samples: SampledInput,
    mode: Interpolation,
    span: (f64, f64),
    grid: Vec<f64>,
    source: String,
}

impl RunInput {
    fn signal(&self) -> Result<InputSignal, CliError> {
        Ok(derive_input_signal(self.samples.times.clone(), self.samples.values.clone(), self.mode)?)
    }
}

fn keyword_input(kind: &str, dim: usize) -> Option<SampledInput> {
    let times = standard_time_grid();
    let constant = |v: f64| SampledInput {
        values: vec![vec![v; dim]; times.len()],
        times: times.clone(),
    };
    match kind {
        "sine" => Some(sine_inputs(dim)),
        "step" => Some(constant(1.0)),
        "zero" => Some(constant(0.0)),
        _ => None,
    }
}

fn resolve_input(args: &InputArgs, dim: usize, model: Option<&Model>) -> Result<RunInput, CliError> {
    let (samples, source) = match &args.input {
        Some(name) => match keyword_input(name, dim) {
            Some(s) => (s, name.clone()),
            None => {
                let path = Path::new(name);
                let table = io::read_input_csv(path)?;
                (
                    SampledInput {
                        times: table.times,
                        values: table.values,
                    },
                    name.clone(),
                )
            }
        },
        None => match model.and_then(|m| m.default_input.clone()) {
            Some(s) => (s, format!("{} default", model.map_or("", |m| &m.source))),
            None => (sine_inputs(dim), "sine".into()),
        },
    };
    if samples.values[0].len() != dim {
        return Err(dynn::Error::Dimension(format!(
            "input has {} channels, network expects {dim}",
            samples.values[0].len()
        ))
        .into());
    }
    let mode = match args.interp {
        Some(InterpKind::Constant) => Interpolation::PiecewiseConstant,
        _ => Interpolation::PiecewiseLinear,
    };
    let (first, last) = samples.span();
    let span = (args.t0.unwrap_or(first), args.tf.unwrap_or(last));
    if !(span.0 < span.1) || span.0 < first || span.1 > last {
        return Err(CliError::Usage(format!(
            "span [{}, {}] must be non-empty and inside the input samples [{first}, {last}]",
            span.0, span.1
        )));
    }
    let mut grid: Vec<f64> = match args.grid_step {
        Some(h) if h > 0.0 => {
            let count = ((span.1 - span.0) / h - 1e-9).ceil() as usize;
            (0..count).map(|k| span.0 + k as f64 * h).collect()
        }
        Some(h) => return Err(CliError::Usage(format!("grid step must be positive, got {h}"))),
        None => samples.times.iter().copied().filter(|&t| t >= span.0 && t < span.1).collect(),
    };
    if grid.first() != Some(&span.0) {
        grid.insert(0, span.0);
    }
    grid.push(span.1);
    Ok(RunInput {
        samples,
        mode,
        span,
        grid,
        source,
    })
}

fn forward(
    params: &DynnParams,
    input: &RunInput,
    settings: &Settings,
    solver: &SolverArgs,
    manifest: &mut RunManifest,
) -> Result<DynnSimulation, CliError> {
    let cfg = ForwardConfig::new(SolverConfig::with_tol(settings.rtol, settings.atol));
    let signal = input.signal()?;
    manifest.param("span", format!("{},{}", input.span.0, input.span.1));
    manifest.param("interpolation", format!("{:?}", input.mode));
    manifest.param("grid_points", input.grid.len());
    let sim = match solver.mode {
        Mode::Whole => {
            manifest.param("mode", "whole");
            forward_pass_whole(params, &signal, input.span, &cfg)?
        }
        Mode::Stepped => {
            let dt = solver
                .dt
                .ok_or_else(|| CliError::Usage("--dt is required in stepped mode".into()))?;
            manifest.param("mode", "stepped");
            manifest.param("dt", dt);
            forward_pass_stepped(params, &signal, input.span, dt, &cfg)?
        }
    };
    for w in &sim.warnings {
        eprintln!("warning: {w}");
    }
    manifest.warnings.extend(sim.warnings.iter().cloned());
    manifest.nfe = Some(sim.report.clone());
    Ok(sim)
}

fn check_dimensions(ss: &StateSpace, params: &DynnParams) -> Result<(), CliError> {
    if ss.inputs() != params.inputs || ss.outputs() != params.outputs {
        return Err(dynn::Error::Dimension(format!(
            "model has {} inputs and {} outputs, parameters have {} and {}",
            ss.inputs(),
            ss.outputs(),
            params.inputs,
            params.outputs
        ))
        .into());
    }
    Ok(())
}

pub fn simulate(config: Option<&Path>, args: &SimulateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let settings = Settings::resolve(config, &overrides(None, Some(&args.solver)))?;
    let params = io::read_params(&args.params)?;
    let model = load_model(&args.model)?;
    if let Some(m) = &model {
        check_dimensions(&m.ss, &params)?;
    }
    let input = resolve_input(&args.input, params.inputs, model.as_ref())?;
    let mut manifest = RunManifest::new("simulate", &settings);
    manifest.inputs.insert("params".into(), display(&args.params));
    manifest.inputs.insert("input".into(), input.source.clone());
    manifest.layer_summary = Some(LayerSummary::of(&params));
    let sim = forward(&params, &input, &settings, &args.solver, &mut manifest)?;
    let ys = sim.outputs_on(&input.grid);
    io::write_series_csv(&args.out, &[("y", params.outputs)], &input.grid, &ys)?;
    manifest.outputs.insert("trace".into(), display(&args.out));
    manifest.seconds = start.elapsed().as_secs_f64();
    manifest.write(&manifest_path(&args.manifest, &args.out))?;
    println!(
        "wrote {}: {} samples, total NFE {}",
        display(&args.out),
        input.grid.len(),
        sim.report.total()
    );
    Ok(())
}

/// Exact reference on the output grid. The oracle runs on the union of the
/// input knots and the output grid, which keeps the interpolated input exact.
fn reference(ss: &StateSpace, input: &RunInput) -> Result<Vec<Vec<f64>>, CliError> {
    let (t0, tf) = input.span;
    let mut times: Vec<f64> = input
        .samples
        .times
        .iter()
        .copied()
        .filter(|&t| t > t0 && t < tf)
        .chain(input.grid.iter().copied())
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let signal = input.signal()?;
    let samples = dynn::oracle::sample_input(&signal, &times);
    let exact = lsim_exact(ss, &times, &samples, input.mode, None)?;
    let mut rows = Vec::with_capacity(input.grid.len());
    let mut k = 0;
    for &t in &input.grid {
        while (times[k] - t).abs() > 1e-12 * (1.0 + t.abs()) {
            k += 1;
        }
        rows.push(exact.outputs[k].clone());
    }
    Ok(rows)
}

fn summarize(errors: &[Vec<f64>], reference: &[Vec<f64>], outputs: usize) -> ErrorSummary {
    let mut max_abs = vec![0.0_f64; outputs];
    let mut scale = vec![0.0_f64; outputs];
    for (e, r) in errors.iter().zip(reference) {
        for j in 0..outputs {
            max_abs[j] = max_abs[j].max(e[j]);
            scale[j] = scale[j].max(r[j].abs());
        }
    }
    let max_rel = max_abs
        .iter()
        .zip(&scale)
        .map(|(a, s)| if *s > 0.0 { a / s } else { *a })
        .collect();
    ErrorSummary {
        overall_max_abs: max_abs.iter().copied().fold(0.0, f64::max),
        max_abs,
        max_rel,
    }
}

pub fn compare(config: Option<&Path>, args: &CompareArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let settings = Settings::resolve(config, &overrides(Some(&args.tuning), Some(&args.solver)))?;
    let model = require_model(&args.model)?;
    let mut manifest = RunManifest::new("compare", &settings);
    manifest.inputs.insert("model".into(), model.source.clone());
    let params = match &args.params {
        Some(path) => {
            manifest.inputs.insert("params".into(), display(path));
            let p = io::read_params(path)?;
            manifest.layer_summary = Some(LayerSummary::of(&p));
            p
        }
        None => convert(&model.ss, &settings, &mut manifest)?,
    };
    check_dimensions(&model.ss, &params)?;
    let input = resolve_input(&args.input, params.inputs, Some(&model))?;
    manifest.inputs.insert("input".into(), input.source.clone());
    let sim = forward(&params, &input, &settings, &args.solver, &mut manifest)?;
    let ys = sim.outputs_on(&input.grid);
    let exact = reference(&model.ss, &input)?;
    let errors: Vec<Vec<f64>> = ys
        .iter()
        .zip(&exact)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()).collect())
        .collect();
    let summary = summarize(&errors, &exact, params.outputs);
    let rows: Vec<Vec<f64>> = ys
        .iter()
        .zip(&exact)
        .zip(&errors)
        .map(|((y, r), e)| y.iter().chain(r).chain(e).copied().collect())
        .collect();
    let d_o = params.outputs;
    io::write_series_csv(&args.out, &[("y", d_o), ("ref", d_o), ("err", d_o)], &input.grid, &rows)?;
    manifest.outputs.insert("errors".into(), display(&args.out));
    if let Some(path) = &args.svg {
        let shown = d_o.min(8);
        let columns: Vec<Vec<f64>> = (0..shown)
            .flat_map(|j| [ys.iter().map(|y| y[j]).collect(), exact.iter().map(|r| r[j]).collect()])
            .collect();
        let series: Vec<Series> = columns
            .iter()
            .enumerate()
            .map(|(c, values)| Series {
                label: format!("{}_{}", if c % 2 == 0 { "y" } else { "ref" }, c / 2 + 1),
                values,
                color: c / 2,
                dashed: c % 2 == 1,
            })
            .collect();
        let title = format!("network (solid) vs reference (dashed), max abs error {:.3e}", summary.overall_max_abs);
        io::write_text(path, &io::render_svg(&title, &input.grid, &series))?;
        manifest.outputs.insert("svg".into(), display(path));
    }
    println!(
        "max abs error {:.6e}, max rel error {:.6e} over {} samples",
        summary.overall_max_abs,
        summary.max_rel.iter().copied().fold(0.0, f64::max),
        input.grid.len()
    );
    manifest.errors = Some(summary);
    manifest.seconds = start.elapsed().as_secs_f64();
    manifest.write(&manifest_path(&args.manifest, &args.out))?;
    Ok(())
}

pub fn sweep(config: Option<&Path>, args: &SweepArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let settings = Settings::resolve(config, &overrides(Some(&args.tuning), None))?;
    let model = require_model(&args.model)?;
    let n = model.ss.states();
    let last = args.to.unwrap_or(n);
    if args.from == 0 || args.from > last || last > n {
        return Err(CliError::Usage(format!(
            "layer range {}..={last} must lie within 1..={n}",
            args.from
        )));
    }
    let mut manifest = RunManifest::new("sweep", &settings);
    manifest.inputs.insert("model".into(), model.source.clone());
    manifest.param("range", format!("{}..={last}", args.from));
    let mut w = csv::Writer::from_path(&args.out).map_err(|e| CliError::parse(&args.out, e))?;
    w.write_record(["L", "cond_t", "layers", "status"])
        .map_err(|e| CliError::parse(&args.out, e))?;
    for layers in args.from..=last {
        let record = match preprocess(&model.ss, &settings, layers) {
            Ok(tr) => {
                let status = if tr.cond_t > settings.max_cond { "ok-ill-conditioned" } else { "ok" };
                [layers.to_string(), tr.cond_t.to_string(), tr.blocks.len().to_string(), status.into()]
            }
            Err(e) => {
                manifest.warnings.push(format!("L = {layers}: {e}"));
                [layers.to_string(), String::new(), String::new(), model_kind(&e).into()]
            }
        };
        println!("{}", record.join(","));
        w.write_record(&record).map_err(|e| CliError::parse(&args.out, e))?;
    }
    w.flush().map_err(|e| CliError::io(&args.out, e))?;
    manifest.outputs.insert("sweep".into(), display(&args.out));
    manifest.seconds = start.elapsed().as_secs_f64();
    manifest.write(&manifest_path(&args.manifest, &args.out))?;
    Ok(())
}
