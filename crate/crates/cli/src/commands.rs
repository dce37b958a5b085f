use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use blindver::analytics::{fooling_bound_p1, fooling_bound_p2};
use blindver::protocols::check::{crosscheck_trials, CrosscheckReport};
use blindver::protocols::{
    estimate_fooling, run_trial_range, AdversaryKind, EstimateResult, ProtocolKind, Setup, Verdict, DEFAULT_SEED,
};
use blindver::verify::Suite;
use serde::Serialize;

use crate::config::{self, FileConfig, RunManifest, SweepSection};
use crate::{AdversaryArgs, BoundsArgs, CommonArgs, Failure, RunArgs, SweepArgs, VerifyArgs};

/// Trials held in memory at once while streaming `trials.csv`.
const CHUNK: u64 = 1 << 16;

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Failure> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::usage(e.to_string())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn base_config(common: &CommonArgs) -> Result<FileConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    let r = &mut cfg.run;
    if common.trials.is_some() {
        r.trials = common.trials;
    }
    if common.seed.is_some() {
        r.seed = common.seed;
    }
    if common.jobs.is_some() {
        r.jobs = common.jobs;
    }
    if common.output_dir.is_some() {
        r.output_dir = common.output_dir.clone();
    }
    if common.assert_bounds {
        r.assert_bounds = Some(true);
    }
    Ok(cfg)
}

fn apply_adversary(cfg: &mut FileConfig, a: &AdversaryArgs) {
    let spec = &mut cfg.adversary;
    if let Some(k) = a.adversary {
        spec.kind = k;
    }
    if a.pauli.is_some() {
        spec.pauli = a.pauli.clone();
    }
    if a.px.is_some() {
        spec.px = a.px;
    }
    if a.pz.is_some() {
        spec.pz = a.pz;
    }
    if a.pxz.is_some() {
        spec.pxz = a.pxz;
    }
    if a.factor.is_some() {
        spec.factor = a.factor;
    }
}

struct Resolved {
    seed: u64,
    trials: u64,
    jobs: usize,
    output_dir: PathBuf,
    assert_bounds: bool,
    crosscheck: u64,
}

fn resolved(cfg: &mut FileConfig) -> Result<Resolved, Failure> {
    cfg.resolve_run();
    let r = &cfg.run;
    let out = Resolved {
        seed: r.seed.unwrap_or(DEFAULT_SEED),
        trials: r.trials.unwrap_or(config::DEFAULT_TRIALS),
        jobs: r.jobs.unwrap_or(1).max(1),
        output_dir: r.output_dir.clone().unwrap_or_else(config::default_output_dir),
        assert_bounds: r.assert_bounds.unwrap_or(false),
        crosscheck: r.crosscheck.unwrap_or(0),
    };
    if out.trials == 0 {
        return Err(Failure::usage("at least one trial is needed".into()));
    }
    fs::create_dir_all(&out.output_dir)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", out.output_dir.display())))?;
    Ok(out)
}

#[derive(Serialize)]
struct RunSummary {
    protocol: ProtocolKind,
    num_qubits: usize,
    code: String,
    code_distance: usize,
    adversary: AdversaryKind,
    #[serde(flatten)]
    estimate: EstimateResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    crosscheck: Option<CrosscheckReport>,
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = base_config(&args.common)?;
    apply_adversary(&mut cfg, &args.adversary);
    if args.protocol.is_some() {
        cfg.protocol.protocol = args.protocol;
    }
    if args.n.is_some() {
        cfg.protocol.n = args.n;
    }
    if args.d.is_some() {
        cfg.protocol.d = args.d;
        cfg.lattice = None;
    }
    if args.crosscheck.is_some() {
        cfg.run.crosscheck = args.crosscheck;
    }
    let setup = cfg.setup()?;
    let adversary = cfg.adversary.resolve(&setup)?;
    let r = resolved(&mut cfg)?;

    let csv_path = r.output_dir.join("trials.csv");
    let mut w = csv_writer(&csv_path)?;
    let (mut accepts, mut fooled) = (0u64, 0u64);
    let mut start = 0;
    while start < r.trials {
        let end = (start + CHUNK).min(r.trials);
        for rec in run_trial_range(&setup, &adversary, r.seed, start..end, r.jobs)? {
            accepts += (rec.outcome == Verdict::Accept) as u64;
            fooled += (rec.outcome == Verdict::Accept && rec.logical_flag) as u64;
            w.serialize(rec).map_err(csv_failure)?;
        }
        start = end;
    }
    w.flush()?;
    let estimate = EstimateResult::from_counts(r.trials, accepts, fooled, setup.bound());

    let crosscheck = match r.crosscheck {
        0 => None,
        k => Some(crosscheck_trials(&setup, &adversary, r.seed, k)?),
    };
    let summary = RunSummary {
        protocol: setup.kind(),
        num_qubits: setup.num_qubits(),
        code: setup.code().describe(),
        code_distance: setup.code().distance(),
        adversary: cfg.adversary.kind,
        estimate: estimate.clone(),
        crosscheck,
    };
    let summary_path = r.output_dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    let manifest = RunManifest::new("run", &cfg, vec![csv_path.clone(), summary_path.clone()]);
    write_json(&r.output_dir.join("manifest.json"), &manifest)?;

    out!(
        "{} on {}: fooled {}/{} (p_hat {}, 95% CI [{:.6}, {:.6}]), bound {:.6} {}",
        match setup.kind() {
            ProtocolKind::Trap => "trap protocol",
            ProtocolKind::Topological => "topological protocol",
        },
        summary.code,
        estimate.fooled,
        estimate.trials,
        estimate.p_hat,
        estimate.ci_low,
        estimate.ci_high,
        estimate.bound,
        if estimate.bound_satisfied { "satisfied" } else { "NOT satisfied" },
    );
    out!("wrote {}, {} and manifest.json", csv_path.display(), summary_path.display());

    if let Some(c) = crosscheck {
        out!("state-level cross-check: {}/{} trials agree", c.agreed, c.checked);
        if !c.passed() {
            return Err(Failure::Assertion(format!(
                "{} of {} cross-checked trials disagree",
                c.checked - c.agreed,
                c.checked
            )));
        }
    }
    if r.assert_bounds && !estimate.bound_satisfied {
        return Err(Failure::Assertion(format!(
            "upper confidence limit {:.6} exceeds the bound {:.6}",
            estimate.ci_high, estimate.bound
        )));
    }
    Ok(())
}

pub fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let suites = match args.suite.as_str() {
        "all" => Suite::ALL.to_vec(),
        name => vec![name.parse::<Suite>()?],
    };
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let (mut total, mut failed) = (0, 0);
    for suite in suites {
        out!("== {suite}");
        for line in suite.run(seed)? {
            out!("{line}");
            total += 1;
            failed += !line.passed as usize;
        }
    }
    if failed > 0 {
        return Err(Failure::Assertion(format!("{failed} of {total} checks failed")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    d: usize,
    bound_p1: f64,
    bound_p2: f64,
    p_hat_p1: f64,
    ci_low_p1: f64,
    ci_high_p1: f64,
    p_hat_p2: f64,
    ci_low_p2: f64,
    ci_high_p2: f64,
}

pub fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut cfg = base_config(&args.common)?;
    if args.common.config.is_none() && args.adversary.adversary.is_none() {
        cfg.adversary.kind = AdversaryKind::Targeted;
    }
    apply_adversary(&mut cfg, &args.adversary);
    if args.d.is_some() {
        cfg.sweep = Some(SweepSection { d: args.d.clone() });
    }
    let text = cfg.sweep.as_ref().and_then(|s| s.d.clone()).unwrap_or_else(|| "1-6".to_string());
    cfg.sweep = Some(SweepSection { d: Some(text.clone()) });
    let distances = config::parse_distances(&text)?;
    let r = resolved(&mut cfg)?;

    let path = r.output_dir.join("sweep.csv");
    let mut w = csv_writer(&path)?;
    let mut violations = Vec::new();
    out!("d,bound_p1,bound_p2,p_hat_p1,ci_low_p1,ci_high_p1,p_hat_p2,ci_low_p2,ci_high_p2");
    for d in distances {
        let mut est = Vec::new();
        for kind in [ProtocolKind::Trap, ProtocolKind::Topological] {
            let setup = Setup::new(&config::config_for_distance(kind, d, None)?)?;
            let adversary = cfg.adversary.resolve(&setup)?;
            let e = estimate_fooling(&setup, &adversary, r.seed, r.trials, r.jobs)?;
            if !e.bound_satisfied {
                violations.push(format!("{kind:?} at d={d}: {:.6} > {:.6}", e.ci_high, e.bound));
            }
            est.push(e);
        }
        let row = SweepRow {
            d,
            bound_p1: est[0].bound,
            bound_p2: est[1].bound,
            p_hat_p1: est[0].p_hat,
            ci_low_p1: est[0].ci_low,
            ci_high_p1: est[0].ci_high,
            p_hat_p2: est[1].p_hat,
            ci_low_p2: est[1].ci_low,
            ci_high_p2: est[1].ci_high,
        };
        out!(
            "{},{},{},{},{},{},{},{},{}",
            row.d,
            row.bound_p1,
            row.bound_p2,
            row.p_hat_p1,
            row.ci_low_p1,
            row.ci_high_p1,
            row.p_hat_p2,
            row.ci_low_p2,
            row.ci_high_p2
        );
        w.serialize(&row).map_err(csv_failure)?;
    }
    w.flush()?;
    let manifest = RunManifest::new("sweep", &cfg, vec![path.clone()]);
    write_json(&r.output_dir.join("manifest.json"), &manifest)?;
    eprintln!("wrote {} and manifest.json", path.display());
    if r.assert_bounds && !violations.is_empty() {
        return Err(Failure::Assertion(format!("bound exceeded: {}", violations.join("; "))));
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundRow {
    d: usize,
    p1_bound: f64,
    p2_bound: f64,
}

pub fn bounds(args: BoundsArgs) -> Result<(), Failure> {
    let distances = config::parse_distances(&args.d)?;
    let rows: Vec<BoundRow> = distances
        .iter()
        .map(|&d| BoundRow { d, p1_bound: fooling_bound_p1(d), p2_bound: fooling_bound_p2(d) })
        .collect();
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        for row in &rows {
            w.serialize(row).map_err(csv_failure)?;
        }
        w.flush()?;
    }
    if let Err(e) = std::io::stdout().write_all(&buf) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(e.into());
        }
    }
    if let Some(dir) = args.output_dir {
        fs::create_dir_all(&dir)?;
        let path = dir.join("bounds.csv");
        fs::write(&path, &buf)?;
        let mut cfg = FileConfig { sweep: Some(SweepSection { d: Some(args.d.clone()) }), ..Default::default() };
        cfg.run.output_dir = Some(dir.clone());
        write_json(&dir.join("manifest.json"), &RunManifest::new("bounds", &cfg, vec![path]))?;
    }
    Ok(())
}
