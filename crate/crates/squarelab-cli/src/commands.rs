use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde_json::{json, Value};

use squarelab_core::exact::{ExactScalar, Rational};
use squarelab_core::gen::GENERATOR_NAME;
use squarelab_core::haar::{shift_energy, DyadicSet, HaarSystem, ShiftEnergy};
use squarelab_core::martingale::{FiltrationTree, LeafSet, TreeNode};
use squarelab_core::moment::{
    chi_enumeration, chi_exact_martingale, wavelet_moment_coefficients, MomentSystem,
};
use squarelab_core::poly::PolyP;
use squarelab_core::search::{
    anneal_search, exhaustive_search, AnnealSchedule, Objective, SearchReport,
};
use squarelab_core::tensor::{tensor_shift_energy, DyadicSet2D};
use squarelab_core::verify::{run_suite, VerifyParams};
use squarelab_core::wavelet::{
    chi_monte_carlo, integrate_over_set, smooth_square_function, WaveletFilter,
};

use crate::config::{resolve, Config};
use crate::ledger::{self, ExperimentRecord, ResultValue};

fn print_output(value: &Value) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn value_pair(s: &ExactScalar) -> Value {
    json!({ "exact": s.to_string(), "float": s.to_f64() })
}

fn record_scalar(results: &mut BTreeMap<String, ResultValue>, name: &str, s: &ExactScalar) {
    results.insert(
        name.to_string(),
        ResultValue::with_float(s.to_string(), s.to_f64()),
    );
}

// ---------------------------------------------------------------- verify --

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suite: numeric, martingale, haar, chi, tensor, wavelet, search, all.
    #[arg(long)]
    suite: Option<String>,
    /// Depth bound for random filtration trees.
    #[arg(long)]
    depth: Option<usize>,
    /// Resolution for dyadic-set suites.
    #[arg(long)]
    resolution: Option<u32>,
    /// Random instances per check.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run_verify(args: &VerifyArgs, config: &Config, ledger_path: &Path) -> Result<u8> {
    let suite = resolve(
        args.suite.clone(),
        config.get_string("suite"),
        "all".to_string(),
    );
    let params = VerifyParams {
        depth: resolve(args.depth, config.get("depth")?, 4),
        resolution: resolve(args.resolution, config.get("resolution")?, 6),
        trials: resolve(args.trials, config.get("trials")?, 50),
        seed: resolve(args.seed, config.get("seed")?, 7),
    };
    let checks = run_suite(&suite, params)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let passed = failed == 0;

    let output = json!({
        "suite": suite,
        "depth": params.depth,
        "resolution": params.resolution,
        "trials": params.trials,
        "seed": params.seed,
        "passed": passed,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "passed": c.passed,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
    });
    print_output(&output)?;

    let mut results = BTreeMap::new();
    results.insert(
        "passed".into(),
        ResultValue::with_float(passed.to_string(), if passed { 1.0 } else { 0.0 }),
    );
    results.insert(
        "checks_total".into(),
        ResultValue::with_float(checks.len().to_string(), checks.len() as f64),
    );
    results.insert(
        "checks_failed".into(),
        ResultValue::with_float(failed.to_string(), failed as f64),
    );
    let mut params_map = BTreeMap::new();
    params_map.insert("suite".into(), suite);
    params_map.insert("depth".into(), params.depth.to_string());
    params_map.insert("resolution".into(), params.resolution.to_string());
    params_map.insert("trials".into(), params.trials.to_string());
    params_map.insert("seed".into(), params.seed.to_string());
    params_map.insert("generator".into(), GENERATOR_NAME.to_string());
    ledger::append(
        ledger_path,
        &ExperimentRecord::new("verify", params_map, Some(params.seed), results),
    )?;

    Ok(if passed { 0 } else { 1 })
}

// ------------------------------------------------------------------- chi --

#[derive(Args, Debug)]
pub struct ChiArgs {
    /// Tree file (JSON) for martingale mode.
    #[arg(long, conflicts_with = "system")]
    tree: Option<PathBuf>,
    /// Haar system spec `N=2;intervals=0:0,1:0` for wavelet mode.
    #[arg(long)]
    system: Option<String>,
    /// Leaf-set spec (`leaves=0,3` / `mask=0x9`) or cell-set spec
    /// (`N=2;cells=0`), matching the mode.
    #[arg(long)]
    set: Option<String>,
    /// exact, enum, or both (cross-checked).
    #[arg(long)]
    mode: Option<String>,
    /// Include the n = 0 difference d_0 = f_0 (martingale mode).
    #[arg(long)]
    include_root: Option<bool>,
}

pub fn run_chi(args: &ChiArgs, config: &Config, ledger_path: &Path) -> Result<u8> {
    let mode = resolve(
        args.mode.clone(),
        config.get_string("mode"),
        "both".to_string(),
    );
    if !["exact", "enum", "both"].contains(&mode.as_str()) {
        bail!("--mode must be exact, enum, or both; got {mode:?}");
    }
    let include_root = resolve(args.include_root, config.get("include-root")?, true);
    let set_spec = resolve(args.set.clone(), config.get_string("set"), String::new());
    if set_spec.is_empty() {
        bail!("--set is required");
    }
    let tree_path = args
        .tree
        .clone()
        .or(config.get_string("tree").map(PathBuf::from));
    let system_spec = args.system.clone().or(config.get_string("system"));

    let (kind, pv, exact_chi, oracle_chi): (&str, Rational, Option<PolyP>, Option<PolyP>) =
        match (&tree_path, &system_spec) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading tree {}", path.display()))?;
                let root: TreeNode = serde_json::from_str(&text)
                    .with_context(|| format!("parsing tree {}", path.display()))?;
                let tree = FiltrationTree::from_root(root)?;
                let v = LeafSet::from_spec(&tree, &set_spec)?;
                let exact = (mode != "enum")
                    .then(|| chi_exact_martingale(&tree, &v, include_root));
                let oracle = if mode != "exact" {
                    Some(chi_enumeration(&MomentSystem::from_martingale(
                        &tree,
                        &v,
                        include_root,
                    ))?)
                } else {
                    None
                };
                ("martingale", tree.pv(&v), exact, oracle)
            }
            (None, Some(spec)) => {
                let system = HaarSystem::from_spec(spec)?;
                let v = DyadicSet::from_spec(&set_spec)?;
                let exact = if mode != "enum" {
                    Some(wavelet_moment_coefficients(&system, &v)?.chi())
                } else {
                    None
                };
                let oracle = if mode != "exact" {
                    Some(chi_enumeration(&MomentSystem::from_haar(&system, &v)?)?)
                } else {
                    None
                };
                ("wavelet", v.measure(), exact, oracle)
            }
            _ => bail!("exactly one of --tree or --system is required"),
        };

    let oracle_match = match (&exact_chi, &oracle_chi) {
        (Some(a), Some(b)) => Some(a == b),
        _ => None,
    };
    let reported = exact_chi
        .as_ref()
        .or(oracle_chi.as_ref())
        .expect("at least one path ran");
    let coeffs = reported.coeff_strings();

    let output = json!({
        "mode": kind,
        "include_root": include_root,
        "coeffs": coeffs,
        "oracle_match": oracle_match,
        "pv": pv.to_string(),
    });
    print_output(&output)?;

    let mut results = BTreeMap::new();
    for (k, c) in reported.coeffs().iter().enumerate() {
        record_scalar(&mut results, &format!("coeff{k}"), c);
    }
    results.insert(
        "pv".into(),
        ResultValue::with_float(pv.to_string(), pv.to_f64()),
    );
    if let Some(matched) = oracle_match {
        results.insert(
            "oracle_match".into(),
            ResultValue::with_float(matched.to_string(), if matched { 1.0 } else { 0.0 }),
        );
    }
    let mut params_map = BTreeMap::new();
    params_map.insert("mode".into(), mode);
    params_map.insert("chi_mode".into(), kind.to_string());
    params_map.insert("set".into(), set_spec);
    params_map.insert("include_root".into(), include_root.to_string());
    if let Some(path) = &tree_path {
        params_map.insert("tree".into(), path.display().to_string());
    }
    if let Some(spec) = &system_spec {
        params_map.insert("system".into(), spec.clone());
    }
    ledger::append(
        ledger_path,
        &ExperimentRecord::new("chi", params_map, None, results),
    )?;

    Ok(0)
}

// ------------------------------------------------------------------- eta --

#[derive(Args, Debug)]
pub struct EtaArgs {
    /// mart-eta, shift-ratio, tensor-square-eta, or tensor-shift-ratio.
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    resolution: Option<u32>,
    /// exhaustive or anneal.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Annealing start temperature.
    #[arg(long)]
    t_start: Option<f64>,
    /// Annealing end temperature.
    #[arg(long)]
    t_end: Option<f64>,
    /// Also write the report JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_eta(args: &EtaArgs, config: &Config, ledger_path: &Path) -> Result<u8> {
    let objective_name = resolve(
        args.objective.clone(),
        config.get_string("objective"),
        String::new(),
    );
    if objective_name.is_empty() {
        bail!("--objective is required");
    }
    let objective = Objective::from_name(&objective_name)?;
    let resolution = resolve(args.resolution, config.get("resolution")?, 3);
    let mode = resolve(
        args.mode.clone(),
        config.get_string("mode"),
        "exhaustive".to_string(),
    );
    let seed = resolve(args.seed, config.get("seed")?, 0);
    let schedule = AnnealSchedule {
        iters: resolve(args.iters, config.get("iters")?, 2000),
        t_start: resolve(args.t_start, config.get("t-start")?, 0.5),
        t_end: resolve(args.t_end, config.get("t-end")?, 1e-3),
    };

    let report: SearchReport = match mode.as_str() {
        "exhaustive" => exhaustive_search(objective, resolution)?,
        "anneal" => anneal_search(objective, resolution, schedule, seed)?,
        other => bail!("--mode must be exhaustive or anneal; got {other:?}"),
    };
    let recertified = report.recertify()?;
    if !recertified {
        bail!("search report failed exact re-certification");
    }

    let mut output = serde_json::to_value(&report)?;
    output
        .as_object_mut()
        .expect("report serializes to an object")
        .insert("recertified".into(), Value::Bool(recertified));
    print_output(&output)?;
    if let Some(out) = &args.out {
        std::fs::write(out, format!("{}\n", serde_json::to_string_pretty(&output)?))
            .with_context(|| format!("writing report {}", out.display()))?;
    }

    let best: ExactScalar = report
        .best_ratio
        .exact
        .parse()
        .map_err(|e| anyhow!("unparseable best ratio: {e}"))?;
    let mut results = BTreeMap::new();
    record_scalar(&mut results, "best_ratio", &best);
    results.insert(
        "best_mask".into(),
        ResultValue::exact_only(report.best_mask.clone()),
    );
    results.insert(
        "visited".into(),
        ResultValue::with_float(report.visited.to_string(), report.visited as f64),
    );
    results.insert(
        "recertified".into(),
        ResultValue::with_float(recertified.to_string(), 1.0),
    );
    let mut params_map = BTreeMap::new();
    params_map.insert("objective".into(), objective_name);
    params_map.insert("resolution".into(), resolution.to_string());
    params_map.insert("mode".into(), mode.clone());
    if mode == "anneal" {
        params_map.insert("iters".into(), schedule.iters.to_string());
        params_map.insert("t_start".into(), schedule.t_start.to_string());
        params_map.insert("t_end".into(), schedule.t_end.to_string());
        params_map.insert("seed".into(), seed.to_string());
        params_map.insert("generator".into(), GENERATOR_NAME.to_string());
    }
    let seed_field = (mode == "anneal").then_some(seed);
    ledger::append(
        ledger_path,
        &ExperimentRecord::new("eta", params_map, seed_field, results),
    )?;

    Ok(0)
}

// ----------------------------------------------------------------- shift --

#[derive(Args, Debug)]
pub struct ShiftArgs {
    /// 1D set spec `N=4;mask=0xA5C3` or `N=4;cells=0,2,5`.
    #[arg(long)]
    set: Option<String>,
}

pub fn run_shift(args: &ShiftArgs, config: &Config, ledger_path: &Path) -> Result<u8> {
    let spec = resolve(args.set.clone(), config.get_string("set"), String::new());
    if spec.is_empty() {
        bail!("--set is required");
    }
    let v = DyadicSet::from_spec(&spec)?;
    let energy = shift_energy(&v)?;
    emit_shift_output("shift", &spec, &v.measure(), &energy, ledger_path)
}

#[derive(Args, Debug)]
pub struct TensorArgs {
    /// 2D set spec `N=2;mask2d=0x8421` (row-major).
    #[arg(long)]
    set: Option<String>,
}

pub fn run_tensor(args: &TensorArgs, config: &Config, ledger_path: &Path) -> Result<u8> {
    let spec = resolve(args.set.clone(), config.get_string("set"), String::new());
    if spec.is_empty() {
        bail!("--set is required");
    }
    let u = DyadicSet2D::from_spec(&spec)?;
    let energy = tensor_shift_energy(&u)?;
    emit_shift_output("tensor", &spec, &u.measure(), &energy, ledger_path)
}

fn emit_shift_output(
    subcommand: &str,
    spec: &str,
    measure: &Rational,
    energy: &ShiftEnergy,
    ledger_path: &Path,
) -> Result<u8> {
    let output = json!({
        "set": spec,
        "measure": measure.to_string(),
        "inside": value_pair(&energy.inside),
        "total": value_pair(&energy.total),
        "pairing": value_pair(&energy.pairing),
    });
    print_output(&output)?;

    let mut results = BTreeMap::new();
    record_scalar(&mut results, "inside", &energy.inside);
    record_scalar(&mut results, "total", &energy.total);
    record_scalar(&mut results, "pairing", &energy.pairing);
    results.insert(
        "measure".into(),
        ResultValue::with_float(measure.to_string(), measure.to_f64()),
    );
    let mut params_map = BTreeMap::new();
    params_map.insert("set".into(), spec.to_string());
    ledger::append(
        ledger_path,
        &ExperimentRecord::new(subcommand, params_map, None, results),
    )?;
    Ok(0)
}

// --------------------------------------------------------------- wavelet --

#[derive(Args, Debug)]
pub struct WaveletArgs {
    /// haar, db4, or db6.
    #[arg(long)]
    filter: Option<String>,
    /// 1D set spec.
    #[arg(long)]
    set: Option<String>,
    /// Grid exponent g (2^g samples).
    #[arg(long)]
    grid: Option<u32>,
    /// Cascade depth; defaults to the grid exponent.
    #[arg(long)]
    levels: Option<u32>,
    /// chi (Monte Carlo third moment) or sq (smooth square function).
    #[arg(long)]
    op: Option<String>,
    /// Bernoulli parameter for chi.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run_wavelet(args: &WaveletArgs, config: &Config, ledger_path: &Path) -> Result<u8> {
    let filter_name = resolve(
        args.filter.clone(),
        config.get_string("filter"),
        "haar".to_string(),
    );
    let filter = WaveletFilter::by_name(&filter_name)?;
    let spec = resolve(args.set.clone(), config.get_string("set"), String::new());
    if spec.is_empty() {
        bail!("--set is required");
    }
    let v = DyadicSet::from_spec(&spec)?;
    let grid = resolve(args.grid, config.get("grid")?, 8);
    let levels = resolve(args.levels, config.get("levels")?, grid);
    let op = resolve(args.op.clone(), config.get_string("op"), "chi".to_string());
    let p = resolve(args.p, config.get("p")?, 0.5);
    let trials = resolve(args.trials, config.get("trials")?, 10_000);
    let seed = resolve(args.seed, config.get("seed")?, 0);

    let mut results = BTreeMap::new();
    let output = match op.as_str() {
        "chi" => {
            let mc = chi_monte_carlo(&v, &filter, grid, levels, p, trials, seed)?;
            results.insert(
                "estimate".into(),
                ResultValue::with_float(format!("{}", mc.estimate), mc.estimate),
            );
            results.insert(
                "stderr".into(),
                ResultValue::with_float(format!("{}", mc.stderr), mc.stderr),
            );
            json!({
                "op": "chi",
                "filter": filter_name,
                "set": spec,
                "grid": grid,
                "levels": levels,
                "p": p,
                "trials": trials,
                "seed": seed,
                "generator": GENERATOR_NAME,
                "estimate": mc.estimate,
                "stderr": mc.stderr,
            })
        }
        "sq" => {
            let sq = smooth_square_function(&v, &filter, grid, levels)?;
            let inside = integrate_over_set(&sq, &v)?;
            let total = sq.integral();
            let ratio = inside / v.measure().to_f64();
            results.insert(
                "sq_ratio".into(),
                ResultValue::with_float(format!("{ratio}"), ratio),
            );
            results.insert(
                "sq_inside".into(),
                ResultValue::with_float(format!("{inside}"), inside),
            );
            results.insert(
                "sq_total".into(),
                ResultValue::with_float(format!("{total}"), total),
            );
            json!({
                "op": "sq",
                "filter": filter_name,
                "set": spec,
                "grid": grid,
                "levels": levels,
                "sq_inside": inside,
                "sq_total": total,
                "sq_ratio": ratio,
            })
        }
        other => bail!("--op must be chi or sq; got {other:?}"),
    };
    print_output(&output)?;

    let mut params_map = BTreeMap::new();
    params_map.insert("filter".into(), filter_name);
    params_map.insert("set".into(), spec);
    params_map.insert("grid".into(), grid.to_string());
    params_map.insert("levels".into(), levels.to_string());
    params_map.insert("op".into(), op.clone());
    if op == "chi" {
        params_map.insert("p".into(), p.to_string());
        params_map.insert("trials".into(), trials.to_string());
        params_map.insert("seed".into(), seed.to_string());
        params_map.insert("generator".into(), GENERATOR_NAME.to_string());
    }
    let seed_field = (op == "chi").then_some(seed);
    ledger::append(
        ledger_path,
        &ExperimentRecord::new("wavelet", params_map, seed_field, results),
    )?;

    Ok(0)
}

// ---------------------------------------------------------------- export --

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Read-only over the ledger: exporting appends no record, so repeated
/// exports of the same ledger yield byte-identical output.
pub fn run_export(args: &ExportArgs, config: &Config, ledger_path: &Path) -> Result<u8> {
    let format = resolve(
        args.format.clone(),
        config.get_string("format"),
        "csv".to_string(),
    );
    let mut stderr = std::io::stderr().lock();
    let (records, warnings) = if ledger_path.exists() {
        ledger::read_all(ledger_path, &mut stderr)?
    } else {
        (Vec::new(), 0)
    };

    let rendered = match format.as_str() {
        "csv" => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record([
                "id",
                "timestamp",
                "subcommand",
                "objective",
                "resolution",
                "seed",
                "result_name",
                "exact",
                "float",
            ])?;
            for record in &records {
                let objective = record.params.get("objective").cloned().unwrap_or_default();
                let resolution = record.params.get("resolution").cloned().unwrap_or_default();
                let seed = record.seed.map(|s| s.to_string()).unwrap_or_default();
                for (name, value) in &record.results {
                    writer.write_record([
                        record.id.as_str(),
                        record.timestamp.as_str(),
                        record.subcommand.as_str(),
                        objective.as_str(),
                        resolution.as_str(),
                        seed.as_str(),
                        name.as_str(),
                        value.exact.as_str(),
                        &value.float.map(|f| f.to_string()).unwrap_or_default(),
                    ])?;
                }
            }
            String::from_utf8(writer.into_inner()?)?
        }
        "json" => format!("{}\n", serde_json::to_string_pretty(&records)?),
        other => bail!("--format must be csv or json; got {other:?}"),
    };

    match &args.out {
        Some(path) => {
            std::fs::write(path, rendered)
                .with_context(|| format!("writing export {}", path.display()))?;
            print_output(&json!({
                "exported": records.len(),
                "warnings": warnings,
                "path": path.display().to_string(),
                "format": format,
            }))?;
        }
        None => {
            print!("{rendered}");
            std::io::stdout().flush()?;
        }
    }
    writeln!(
        stderr,
        "exported {} records, {warnings} warnings",
        records.len()
    )?;
    Ok(0)
}
