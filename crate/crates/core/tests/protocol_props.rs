//! Trap-avoidance probabilities and protocol-level invariants.

use blindver::analytics::{
    single_type_formula, string_survival_prob, survival_prob, to_f64, trap_avoid_bound, trap_avoid_exact,
    trap_avoid_recursive, weight_bound, AttackProfile,
};
use blindver::lattice::LatticeConfig;
use blindver::pauli::{ByproductKey, PauliString, Role, RolePermutation, SinglePauli, TwirlKey};
use blindver::protocols::{
    channel_direction_audit, evaluate_protocol1, evaluate_protocol2, run_protocol1, run_protocol2, run_trial,
    run_trials, AdversaryModel, PauliChannel, ProtocolConfig, ProtocolKind, Roles, Setup, TrialRngs, Verdict,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every layout with `n/3` of each role; the attack puts X on the first
/// `a` positions, Z on the next `b` and XZ on the next `c`.
fn brute_force_avoidance(n: usize, a: usize, b: usize, c: usize) -> BigRational {
    fn walk(left: [usize; 3], layout: &mut Vec<Role>, attack: &[SinglePauli], safe: &mut u64, total: &mut u64) {
        if left == [0, 0, 0] {
            *total += 1;
            let ok = layout.iter().zip(attack).all(|(role, f)| match f {
                SinglePauli::XZ => *role == Role::Resource,
                f => !role.flipped_by(*f),
            });
            *safe += ok as u64;
            return;
        }
        for (i, role) in Role::ALL.into_iter().enumerate() {
            if left[i] > 0 {
                let mut next = left;
                next[i] -= 1;
                layout.push(role);
                walk(next, layout, attack, safe, total);
                layout.pop();
            }
        }
    }
    let mut attack = vec![SinglePauli::I; n];
    attack[..a].fill(SinglePauli::X);
    attack[a..a + b].fill(SinglePauli::Z);
    attack[a + b..a + b + c].fill(SinglePauli::XZ);
    let (mut safe, mut total) = (0, 0);
    walk([n / 3; 3], &mut Vec::new(), &attack, &mut safe, &mut total);
    BigRational::new(BigInt::from(safe), BigInt::from(total))
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn bare(kind: ProtocolKind, n: usize) -> Setup {
    Setup::new(&ProtocolConfig { protocol: kind, n: Some(n), lattice: None, seed: 1, trials: 1 }).unwrap()
}

fn on_lattice(kind: ProtocolKind, d: usize) -> Setup {
    let lattice = Some(LatticeConfig { distance: Some(d), ..Default::default() });
    Setup::new(&ProtocolConfig { protocol: kind, n: None, lattice, seed: 1, trials: 1 }).unwrap()
}

/// Within `k` standard errors of the pooled two-sample difference.
fn same_rate(x1: u64, x2: u64, n: u64, k: f64) -> bool {
    let (p1, p2) = (x1 as f64 / n as f64, x2 as f64 / n as f64);
    let p = (p1 + p2) / 2.0;
    let se = (2.0 * p * (1.0 - p) / n as f64).sqrt();
    (p1 - p2).abs() <= k * se.max(1.0 / n as f64)
}

#[test]
fn exact_avoidance_matches_brute_force() {
    for n in [3, 6, 9] {
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    let profile = AttackProfile::new(a, b, c, n).unwrap();
                    let expected = brute_force_avoidance(n, a, b, c);
                    assert_eq!(trap_avoid_exact(&profile).unwrap(), expected, "{profile:?}");
                    assert_eq!(trap_avoid_recursive(&profile).unwrap(), expected, "{profile:?}");
                }
            }
        }
    }
}

#[test]
fn worked_values() {
    assert_eq!(brute_force_avoidance(3, 1, 0, 0), rational(2, 3));
    assert_eq!(brute_force_avoidance(6, 1, 1, 0), rational(7, 15));
    assert_eq!(trap_avoid_exact(&AttackProfile::new(1, 0, 0, 3).unwrap()).unwrap(), rational(2, 3));
    assert_eq!(trap_avoid_exact(&AttackProfile::new(1, 1, 0, 6).unwrap()).unwrap(), rational(7, 15));
}

#[test]
fn single_type_formula_matches_recursion() {
    for n in [3, 6, 9, 12] {
        for a in 0..=n {
            let p = AttackProfile::new(a, 0, 0, n).unwrap();
            assert_eq!(single_type_formula(n, a).unwrap(), trap_avoid_recursive(&p).unwrap(), "N={n} a={a}");
        }
    }
}

#[test]
fn survival_frequencies_over_many_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 100_000u64;
    for f in [SinglePauli::X, SinglePauli::Z, SinglePauli::XZ] {
        let p = PauliString::single(1, 0, f).unwrap();
        let hits = (0..samples)
            .filter(|_| {
                let k = TwirlKey::sample(1, &mut rng);
                p.conjugate_by_twirlkey(&k).unwrap().factor(0).unwrap().z()
            })
            .count() as f64;
        let expected = survival_prob(f).unwrap();
        let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
        assert!((hits / samples as f64 - expected).abs() <= 3.0 * sigma, "{f:?}: {hits}");
    }
}

#[test]
fn string_survival_over_many_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let samples = 100_000u64;
    for text in ["+ X.Z.XZ", "+ XZ.XZ.X", "+ Z.Z.Z", "+ X.X.Z.XZ.I"] {
        let s: PauliString = text.parse().unwrap();
        let n = s.num_qubits();
        let survived = (0..samples)
            .filter(|_| {
                let k = TwirlKey::sample(n, &mut rng);
                s.conjugate_by_twirlkey(&k).unwrap().support().all(|(_, f)| f.z())
            })
            .count() as f64;
        let expected = string_survival_prob(&s);
        let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
        assert!((survived / samples as f64 - expected).abs() <= 3.0 * sigma, "{text}");
        assert!(expected <= 0.75f64.powi(s.weight() as i32) + 1e-15);
    }
}

#[test]
fn single_x_abort_rate_on_three_qubits() {
    let setup = bare(ProtocolKind::Trap, 3);
    let sigma = PauliString::single(3, 0, SinglePauli::X).unwrap();
    let records = run_trials(&setup, &AdversaryModel::FixedPauli(sigma), 11, 10_000, 4).unwrap();
    let aborts = records.iter().filter(|r| r.outcome == Verdict::Abort).count() as f64;
    let sigma = (2.0f64 / 9.0 / 10_000.0).sqrt();
    assert!((aborts / 10_000.0 - 1.0 / 3.0).abs() <= 3.0 * sigma, "{aborts}");
}

#[test]
fn single_x_survival_in_the_topological_protocol() {
    let setup = on_lattice(ProtocolKind::Topological, 3);
    let n = setup.num_qubits();
    let sigma = PauliString::single(n, n / 2, SinglePauli::X).unwrap();
    let records = run_trials(&setup, &AdversaryModel::FixedPauli(sigma), 12, 10_000, 4).unwrap();
    let survived = records.iter().filter(|r| r.trap_flips == 0).count() as f64;
    let sigma = (0.75f64 * 0.25 / 10_000.0).sqrt();
    assert!((survived / 10_000.0 - 0.75).abs() <= 3.0 * sigma, "{survived}");
}

#[test]
fn statistics_ignore_how_the_server_labels_its_qubits() {
    let trials = 20_000;
    for (kind, n, text) in [
        (ProtocolKind::Trap, 9, "+ X.Z.I.XZ.I.I.I.I.I"),
        (ProtocolKind::Trap, 12, "+ X.X.Z.I.I.I.I.I.I.I.I.I"),
        (ProtocolKind::Topological, 5, "+ X.Z.XZ.I.I"),
    ] {
        let setup = bare(kind, n);
        let sigma: PauliString = text.parse().unwrap();
        let mut moved = PauliString::identity(n);
        for (j, f) in sigma.support() {
            moved.set_factor((7 * j + 3) % n, f).unwrap();
        }
        let counts = |p: &PauliString| {
            let r = run_trials(&setup, &AdversaryModel::FixedPauli(p.clone()), 5, trials, 4).unwrap();
            let aborts = r.iter().filter(|t| t.outcome == Verdict::Abort).count() as u64;
            let fooled = r.iter().filter(|t| t.outcome == Verdict::Accept && t.logical_flag).count() as u64;
            (aborts, fooled)
        };
        let (a1, f1) = counts(&sigma);
        let (a2, f2) = counts(&moved);
        assert!(same_rate(a1, a2, trials, 3.0), "{text}: aborts {a1} vs {a2}");
        assert!(same_rate(f1, f2, trials, 3.0), "{text}: fooled {f1} vs {f2}");
    }
}

#[test]
fn byproduct_cancels_for_every_key() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p1 = bare(ProtocolKind::Trap, 6);
    let p2 = bare(ProtocolKind::Topological, 4);
    for _ in 0..20 {
        let sigma = PauliString::random(6, &mut rng);
        let roles = RolePermutation::sample(6, &mut rng).unwrap();
        let first = evaluate_protocol1(&p1, &sigma, Roles::Full(&roles), &ByproductKey::from_index(6, 0)).unwrap();
        for i in 1..1 << 12 {
            let q = ByproductKey::from_index(6, i);
            assert_eq!(evaluate_protocol1(&p1, &sigma, Roles::Full(&roles), &q).unwrap(), first);
        }
        let sigma = PauliString::random(4, &mut rng);
        let k = TwirlKey::sample(4, &mut rng);
        let first = evaluate_protocol2(&p2, &sigma, &k, &ByproductKey::from_index(4, 0)).unwrap();
        for i in 1..1 << 8 {
            let q = ByproductKey::from_index(4, i);
            assert_eq!(evaluate_protocol2(&p2, &sigma, &k, &q).unwrap(), first);
        }
    }
}

#[test]
fn honest_runs_keep_a_one_way_channel() {
    for setup in [on_lattice(ProtocolKind::Trap, 3), on_lattice(ProtocolKind::Topological, 3)] {
        for t in 0..50 {
            let mut rngs = TrialRngs::for_trial(9, t);
            let transcript = match setup.kind() {
                ProtocolKind::Trap => run_protocol1(&setup, &AdversaryModel::Honest, &mut rngs),
                ProtocolKind::Topological => run_protocol2(&setup, &AdversaryModel::Honest, &mut rngs),
            }
            .unwrap();
            assert!(channel_direction_audit(&transcript));
            assert!(!transcript.aborted());
            assert!(!transcript.outcome.fooled());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn bound_chain_holds(m in 1usize..=4, seed in any::<u64>()) {
        let n = 3 * m;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.random_range(0..=n);
        let b = rng.random_range(0..=n - a);
        let c = rng.random_range(0..=n - a - b);
        let profile = AttackProfile::new(a, b, c, n).unwrap();
        let exact = trap_avoid_exact(&profile).unwrap();
        let bound = trap_avoid_bound(&profile);
        prop_assert!(exact <= bound);
        prop_assert!(to_f64(&bound) <= weight_bound(profile.weight()) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn fooling_implies_acceptance(trap in any::<bool>(), d in 1usize..=4, rate in 0.0f64..0.3, seed in any::<u64>()) {
        let kind = if trap { ProtocolKind::Trap } else { ProtocolKind::Topological };
        let setup = if d == 1 { bare(kind, 9) } else { on_lattice(kind, d) };
        let adversary = AdversaryModel::RandomPauliChannel(PauliChannel::iid(rate / 3.0, rate / 3.0, rate / 3.0).unwrap());
        for t in 0..50 {
            let o = run_trial(&setup, &adversary, &mut TrialRngs::for_trial(seed, t)).unwrap();
            if o.verdict == Verdict::Accept {
                prop_assert_eq!(o.trap_flips, 0);
                prop_assert_eq!(o.syndrome_count, 0);
            } else {
                prop_assert!(o.trap_flips > 0 || o.syndrome_count > 0);
            }
            if o.fooled() {
                prop_assert_eq!(o.verdict, Verdict::Accept);
            }
        }
    }
}
