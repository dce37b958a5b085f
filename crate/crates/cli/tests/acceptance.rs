//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process fails if any criterion fails other than those in
//! `KNOWN_CONFLICTS`, whose FAIL lines are printed all the same.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use blindver::analytics::{fooling_bound_p1, fooling_bound_p2, survival_prob};
use blindver::circuit::Basis;
use blindver::lattice::LatticeConfig;
use blindver::pauli::{PauliString, SinglePauli, TwirlKey};
use blindver::protocols::{
    estimate_fooling, AdversaryModel, EstimateResult, PauliChannel, ProtocolConfig, ProtocolKind, Setup,
};
use blindver::stab::Tableau;
use blindver::verify::{self, CheckLine};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

/// Criteria that cannot hold in the lattice model as defined, with the reason.
const KNOWN_CONFLICTS: [(u32, &str); 1] = [(
    7,
    "a Z chain on the six faces of a cube flips each of the six neighbouring cubes, \
     because every cell check is X on its own six faces; the clause asks for Trivial",
)];

struct Criterion {
    id: u32,
    title: &'static str,
    passed: bool,
    lines: Vec<String>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Criterion { id, title, passed: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn absorb(&mut self, lines: Vec<CheckLine>) {
        for l in lines {
            self.check(l.passed, format!("{}: {}", l.name, l.detail));
        }
    }

    fn timed(&mut self, elapsed: Duration, limit: Duration) {
        self.check(elapsed < limit, format!("runtime {:.2} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs()));
    }
}

fn setup(kind: ProtocolKind, d: usize) -> Setup {
    let config = if d == 1 {
        let n = if kind == ProtocolKind::Trap { 3 } else { 1 };
        ProtocolConfig { protocol: kind, n: Some(n), lattice: None, seed: SEED, trials: 0 }
    } else {
        let lattice = Some(LatticeConfig { distance: Some(d), ..Default::default() });
        ProtocolConfig { protocol: kind, n: None, lattice, seed: SEED, trials: 0 }
    };
    Setup::new(&config).expect("canonical setup")
}

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn describe(r: &EstimateResult) -> String {
    format!("fooled {}/{}, p_hat {:.5}, 95% upper {:.5}, bound {:.5}", r.fooled, r.trials, r.p_hat, r.ci_high, r.bound)
}

fn twirl() -> Criterion {
    let mut c = Criterion::new(1, "twirling identity");
    let start = Instant::now();
    c.absorb(verify::twirl_suite(SEED).unwrap());
    c.timed(start.elapsed(), Duration::from_secs(10));
    c
}

fn constant_output() -> Criterion {
    let mut c = Criterion::new(2, "constant-output CPTP construction");
    let start = Instant::now();
    c.absorb(verify::cptp_suite(SEED).unwrap());
    c.timed(start.elapsed(), Duration::from_secs(30));
    c
}

fn reduction() -> Criterion {
    let mut c = Criterion::new(3, "general attacks reduce to Pauli channels");
    c.absorb(verify::reduction_suite(SEED).unwrap());
    c
}

fn trap_avoidance() -> Criterion {
    let mut c = Criterion::new(4, "exact trap avoidance");
    c.absorb(verify::trapprob_suite(SEED).unwrap());
    c
}

fn trap_bound() -> Criterion {
    let mut c = Criterion::new(5, "trap protocol fooling bound");
    for d in [3, 6, 9] {
        let start = Instant::now();
        let s = setup(ProtocolKind::Trap, d);
        let adversary = AdversaryModel::targeted(&s, SinglePauli::Z).unwrap();
        let r = estimate_fooling(&s, &adversary, SEED + d as u64, 100_000, jobs()).unwrap();
        c.check(r.ci_high <= fooling_bound_p1(d), format!("d={d}: {}", describe(&r)));
        c.timed(start.elapsed(), Duration::from_secs(300));
    }
    c
}

fn topological_bound() -> Criterion {
    let mut c = Criterion::new(6, "topological protocol fooling bound");
    for d in 1..=8 {
        let s = setup(ProtocolKind::Topological, d);
        let adversary = AdversaryModel::targeted(&s, SinglePauli::Z).unwrap();
        let r = estimate_fooling(&s, &adversary, SEED + d as u64, 100_000, jobs()).unwrap();
        c.check(r.ci_high <= fooling_bound_p2(d), format!("d={d}: {}", describe(&r)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let samples = 100_000u32;
    for f in [SinglePauli::X, SinglePauli::Z, SinglePauli::XZ] {
        let p = PauliString::single(1, 0, f).unwrap();
        let hits = (0..samples)
            .filter(|_| p.conjugate_by_twirlkey(&TwirlKey::sample(1, &mut rng)).unwrap().factor(0).unwrap().z())
            .count();
        let expected = survival_prob(f).unwrap();
        let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
        let freq = hits as f64 / samples as f64;
        c.check(
            (freq - expected).abs() <= 3.0 * sigma,
            format!("survival of {f:?}: {freq:.5} vs {expected} (3 sigma = {:.5}) over {samples} keys", 3.0 * sigma),
        );
    }
    c
}

fn lattice() -> Criterion {
    let mut c = Criterion::new(7, "lattice correctness");
    let lines = verify::lattice_suite().unwrap();
    // the first three lines are the three clauses; the rest are extra checks
    c.absorb(lines);
    c
}

fn simulators() -> Criterion {
    let mut c = Criterion::new(8, "stabilizer and dense simulators agree");
    c.absorb(verify::circuit_equivalence(SEED, 200, 400).unwrap());
    c
}

fn performance() -> Criterion {
    let mut c = Criterion::new(9, "performance");
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = Instant::now();
    let edges: Vec<(usize, usize)> = (1..n).map(|q| (q - 1, q)).collect();
    let mut t = Tableau::graph_state(n, &edges).unwrap();
    for q in 0..n {
        t.measure(q, Basis::X, &mut rng).unwrap();
    }
    let sweep = start.elapsed();
    c.check(
        sweep < Duration::from_secs(5),
        format!("X sweep over a {n}-qubit cluster state in {:.2} s (limit 5 s)", sweep.as_secs_f64()),
    );

    let s = Setup::new(&ProtocolConfig {
        protocol: ProtocolKind::Trap,
        n: Some(3000),
        lattice: None,
        seed: SEED,
        trials: 0,
    })
    .unwrap();
    let adversary = AdversaryModel::RandomPauliChannel(PauliChannel::iid(0.001, 0.001, 0.001).unwrap());
    let trials = 100_000;
    let start = Instant::now();
    estimate_fooling(&s, &adversary, SEED, trials, 1).unwrap();
    let rate = trials as f64 / start.elapsed().as_secs_f64();
    c.check(rate >= 1e4, format!("trap protocol at N=3000 on one thread: {rate:.0} trials/s (need 10000)"));
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("blindver-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn cli(args: &[&str], out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_blindver"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn reproducibility() -> Criterion {
    let mut c = Criterion::new(10, "byte-identical output for any --jobs");
    let cases: [(&str, &[&str], &str); 3] = [
        (
            "trap",
            &["run", "--protocol", "trap", "--d", "3", "--adversary", "targeted", "--trials", "20000", "--seed", "7"],
            "trials.csv",
        ),
        (
            "topo",
            &[
                "run",
                "--protocol",
                "topo",
                "--d",
                "4",
                "--adversary",
                "channel",
                "--px",
                "0.002",
                "--pz",
                "0.002",
                "--trials",
                "20000",
            ],
            "trials.csv",
        ),
        ("sweep", &["sweep", "--d", "1-4", "--trials", "5000", "--seed", "11"], "sweep.csv"),
    ];
    for (name, args, file) in cases {
        let outputs: Vec<Option<Vec<u8>>> = ["1", "3", "8"]
            .iter()
            .map(|j| {
                let dir = scratch(&format!("{name}-{j}"));
                let mut full = args.to_vec();
                full.extend(["--jobs", j]);
                cli(&full, &dir).then(|| std::fs::read(dir.join(file)).ok()).flatten()
            })
            .collect();
        let ok = outputs[0].is_some() && outputs.iter().all(|o| o == &outputs[0]);
        let size = outputs[0].as_ref().map_or(0, Vec::len);
        c.check(ok, format!("{name}: {file} ({size} bytes) with --jobs 1, 3 and 8"));
    }
    let first = scratch("replay-a");
    let second = scratch("replay-b");
    let ran = cli(
        &["run", "--protocol", "trap", "--n", "9", "--adversary", "channel", "--px", "0.05", "--trials", "5000"],
        &first,
    );
    let manifest = first.join("manifest.json");
    let replayed = ran && cli(&["run", "--config", manifest.to_str().unwrap(), "--jobs", "5"], &second);
    let same =
        replayed && std::fs::read(first.join("trials.csv")).ok() == std::fs::read(second.join("trials.csv")).ok();
    c.check(same, "manifest replay reproduces trials.csv".to_string());
    c
}

fn main() {
    let criteria: [fn() -> Criterion; 10] = [
        twirl,
        constant_output,
        reduction,
        trap_avoidance,
        trap_bound,
        topological_bound,
        lattice,
        simulators,
        performance,
        reproducibility,
    ];
    let mut unexpected = Vec::new();
    for run in criteria {
        let c = run();
        println!("{} criterion {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.title);
        for l in &c.lines {
            println!("     {l}");
        }
        if !c.passed {
            match KNOWN_CONFLICTS.iter().find(|(id, _)| *id == c.id) {
                Some((_, why)) => println!("     known conflict: {why}"),
                None => unexpected.push(c.id),
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failed criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
