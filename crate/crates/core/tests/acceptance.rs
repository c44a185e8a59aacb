//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;

use causal_filter::info_theory::total_variation;
use causal_filter::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: usize = 3;
const L: usize = 2;

type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn joint(b: Builtin) -> WordJoint {
    HiddenMarkovProcess::builtin(b).exact_joint(K, L).unwrap()
}

fn trace(j: &WordJoint, seed: u64, max_clusters: usize) -> InfoPlaneCurve {
    let sched = AnnealingSchedule {
        seed,
        ..Default::default()
    };
    anneal_trace(j, &sched, max_clusters, &IbConfig::default()).unwrap()
}

fn oce_schedule(seed: u64) -> AnnealingSchedule {
    AnnealingSchedule {
        seed,
        restarts: causal_filter::oce::DEFAULT_RESTARTS,
        ..Default::default()
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn exact_quantities() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, what: &str, x: f64, target: f64, tol: f64| {
        if !within(x, target, tol) {
            failures.push(format!("{name} {what}={x:.6} (want {target}±{tol})"));
        }
    };
    for b in Builtin::ALL {
        let j = joint(b);
        let e = excess_entropy(&j);
        let h = j.history_entropy();
        let c = statistical_complexity(&causal_partition(&j, 1e-9));
        let n = b.name();
        match b {
            Builtin::GoldenMean => {
                check(n, "E", e, 0.25, 0.01);
                check(n, "H", h, 2.25, 0.01);
                check(n, "Cmu", c, 0.92, 0.01);
            }
            Builtin::Even => {
                check(n, "E", e, 0.292, 0.005);
                check(n, "H", h, 2.585, 0.005);
            }
            Builtin::Rrxor => {
                check(n, "E", e, 0.230, 0.005);
                check(n, "H", h, 2.981, 0.005);
            }
            Builtin::Period4 => {
                check(n, "E", e, 2.0, 1e-9);
                check(n, "H", h, 2.0, 1e-9);
                check(n, "Cmu", c, 2.0, 1e-9);
            }
        }
    }
    if failures.is_empty() {
        Outcome::new(true, "all exact quantities within tolerance")
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn causal_state_recovery() -> Outcome {
    let mut summary = Vec::new();
    let mut pass = true;
    for b in Builtin::ALL {
        let j = joint(b);
        let oracle = causal_partition(&j, 1e-9);
        let hits = (0..10u64)
            .filter(|&seed| {
                let p = trace(&j, seed, 8).terminal_partition;
                p.same_grouping(&oracle) && p.max_morph_deviation(&oracle) < 1e-6
            })
            .count();
        pass &= hits >= 9;
        summary.push(format!("{} {hits}/10", b.name()));
    }
    Outcome::new(pass, summary.join(", "))
}

fn state_counts() -> Outcome {
    let want = [
        (Builtin::Period4, 4),
        (Builtin::GoldenMean, 2),
        (Builtin::Even, 3),
        (Builtin::Rrxor, 8),
    ];
    let got: Vec<(Builtin, usize, usize)> = want
        .iter()
        .map(|&(b, n)| (b, n, causal_partition(&joint(b), 1e-9).n_states()))
        .collect();
    let pass = got.iter().all(|&(_, n, m)| n == m);
    let detail = got
        .iter()
        .map(|(b, _, m)| format!("{} {m}", b.name()))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(pass, detail)
}

/// Distinct morphs of the clusters carrying weight, merged like
/// effective-state counting.
fn live_morphs(m: &SoftModel, cfg: &IbConfig) -> Vec<Vec<f64>> {
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for s in 0..m.n_clusters() {
        if m.dormant()[s] {
            continue;
        }
        let morph = &m.morphs()[s];
        match out
            .iter_mut()
            .find(|(r, _)| total_variation(r, morph) <= cfg.merge_tol)
        {
            Some((_, w)) => *w += m.p_s()[s],
            None => out.push((morph.clone(), m.p_s()[s])),
        }
    }
    out.into_iter()
        .filter(|(_, w)| *w > cfg.weight_floor)
        .map(|(r, _)| r)
        .collect()
}

fn period4_diagonal() -> Outcome {
    let j = joint(Builtin::Period4);
    let c = trace(&j, 0, 8);
    let worst = c
        .points
        .iter()
        .map(|p| (p.i_s_future - p.i_past_s).abs())
        .fold(0.0, f64::max);
    let markers = c.markers();
    let Some(two) = markers.get(&2) else {
        return Outcome::new(
            false,
            format!("no 2-state marker (markers {:?})", markers.keys()),
        );
    };
    let p = &c.points[two.index];
    let at_one = within(p.i_past_s, 1.0, 0.02) && within(p.i_s_future, 1.0, 0.02);
    let targets = [vec![0.5, 0.0, 0.0, 0.5], vec![0.0, 0.5, 0.5, 0.0]];
    let morphs = live_morphs(&c.models[two.index], &IbConfig::default());
    let morphs_match = morphs.len() == 2
        && targets.iter().all(|t| {
            morphs
                .iter()
                .any(|m| m.iter().zip(t).all(|(a, b)| (a - b).abs() <= 1e-6))
        });
    Outcome::new(
        worst < 0.02 && at_one && morphs_match,
        format!(
            "max |I_S_future - I_past_S| = {worst:.2e}, 2-state marker at ({:.4}, {:.4}), morphs match: {morphs_match}",
            p.i_past_s, p.i_s_future
        ),
    )
}

fn rrxor_mid_curve() -> Outcome {
    let j = joint(Builtin::Rrxor);
    let h = j.history_entropy();
    let e = excess_entropy(&j);
    let full = trace(&j, 0, 8);
    let terminal = full.points.last().unwrap().i_past_s;
    let four = trace(&j, 0, 4);
    let Some(i) = best_tradeoff_point(&four.points, 4, h, e) else {
        return Outcome::new(false, "no 4-state point on the 4-cluster trace");
    };
    let p = &four.points[i];
    let (rate, kept) = (p.i_past_s / h, p.i_s_future / e);
    Outcome::new(
        within(terminal, h, 0.01) && within(rate, 0.33, 0.05) && within(kept, 0.50, 0.05),
        format!(
            "terminal I_past_S = {terminal:.4} (H = {h:.4}); best 4-state point at λ = {:.4}: {:.1}% of H, {:.1}% of E",
            p.lambda,
            100.0 * rate,
            100.0 * kept
        ),
    )
}

fn oce_selection() -> Outcome {
    let range: Vec<usize> = (1..=6).collect();
    let mut pass = true;
    let mut summary = Vec::new();
    for (b, want) in [(Builtin::GoldenMean, 2), (Builtin::Even, 3)] {
        let hmm = HiddenMarkovProcess::builtin(b);
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        let mut raw_monotone = true;
        let mut interior = true;
        for seed in 0..20u64 {
            let s = hmm.sample_series(100, seed).unwrap();
            let e = empirical_joint(&s, K, L).unwrap();
            let sched = oce_schedule(seed);
            let t = corrected_curve(&e, &range, &sched, &IbConfig::default()).unwrap();
            *votes.entry(t.chosen).or_default() += 1;
            raw_monotone &= t.rows.windows(2).all(|w| w[1].i_raw >= w[0].i_raw - 1e-12);
            interior &= t.chosen != range[0] && t.chosen != *range.last().unwrap();
        }
        let top = votes.values().copied().max().unwrap();
        let modes: Vec<usize> = votes
            .iter()
            .filter(|(_, &v)| v == top)
            .map(|(&n, _)| n)
            .collect();
        pass &= modes == [want] && raw_monotone && interior;
        summary.push(format!(
            "{} votes {votes:?} (want mode {want}), raw non-decreasing: {raw_monotone}, interior maximum: {interior}",
            b.name()
        ));
    }
    Outcome::new(pass, summary.join("; "))
}

fn correction_formula() -> Outcome {
    let got = correction(2, 2, 2, 96).unwrap();
    let want = 3.0 * 2.0 / (2.0 * std::f64::consts::LN_2 * 96.0);
    Outcome::new(
        (got - want).abs() <= 2.0 * f64::EPSILON * want,
        format!("{got:.17} vs {want:.17}"),
    )
}

fn property_suite() -> Outcome {
    let cfg = IbConfig::default();
    let mut failures = Vec::new();
    let mut models = 0usize;
    for b in Builtin::ALL {
        let j = joint(b);
        let e = excess_entropy(&j);
        let oracle = causal_partition(&j, 1e-9);
        let c = trace(&j, 0, 8);
        for m in c.models.iter().chain(std::iter::once(&c.terminal_model)) {
            models += 1;
            let (_, kept) = m.information(&j);
            if kept > e + 1e-9 {
                failures.push(format!("{}: I[S;future] {kept} exceeds E {e}", b.name()));
            }
            if m.max_row_error() > 1e-12 {
                failures.push(format!(
                    "{}: row sum error {:e}",
                    b.name(),
                    m.max_row_error()
                ));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for lambda in [0.01, 0.1, 1.0] {
            for _ in 0..5 {
                let n = rng.gen_range(2..=8);
                let init = SoftModel::perturbed_uniform(&j, n, lambda, 0.5, &mut rng);
                let (_, report) = ib_converge(&j, init, cfg.tol, cfg.max_iter).unwrap();
                if report.worst_objective_drop > 1e-12 {
                    failures.push(format!(
                        "{}: objective dropped by {:e} at λ={lambda}",
                        b.name(),
                        report.worst_objective_drop
                    ));
                }
            }
            let rival = Partition::identity(&j);
            let delta =
                deterministic_objective(&oracle, lambda) - deterministic_objective(&rival, lambda);
            let identity =
                lambda * (statistical_complexity(&rival) - statistical_complexity(&oracle));
            if (delta - identity).abs() > 1e-9 {
                failures.push(format!(
                    "{}: ΔF {delta} vs {identity} at λ={lambda}",
                    b.name()
                ));
            }
        }
        let shielding = oracle.shielding_violation(&j);
        if shielding > 1e-8 {
            failures.push(format!("{}: shielding violation {shielding:e}", b.name()));
        }
    }
    if failures.is_empty() {
        Outcome::new(
            true,
            format!("{models} traced models checked, all properties hold"),
        )
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn consistency() -> Outcome {
    let hmm = HiddenMarkovProcess::builtin(Builtin::GoldenMean);
    let j = joint(Builtin::GoldenMean);
    let exact = causal_partition(&j, 1e-9);
    let weights = j.history_marginal();
    let range: Vec<usize> = (1..=6).collect();
    let seeds = 0..5u64;
    let mut mean_tv = Vec::new();
    let mut cmu_ok = true;
    let mut cmus = Vec::new();
    for t in [100usize, 1_000, 10_000] {
        let mut total = 0.0;
        for seed in seeds.clone() {
            let s = hmm.sample_series(t, seed).unwrap();
            let e = empirical_joint(&s, K, L).unwrap();
            let sched = oce_schedule(seed);
            let table = corrected_curve(&e, &range, &sched, &IbConfig::default()).unwrap();
            let p = table.chosen_partition();
            let uniform = vec![1.0 / j.n_futures() as f64; j.n_futures()];
            for h in j.support() {
                let est = p.state_of(h).map_or(&uniform, |s| &p.morphs()[s]);
                let truth = &exact.morphs()[exact.state_of(h).unwrap()];
                total += weights[h] * total_variation(est, truth);
            }
            if t == 10_000 {
                let c = statistical_complexity(p);
                cmu_ok &= within(c, 0.9183, 0.02);
                cmus.push(format!("{c:.4}"));
            }
        }
        mean_tv.push(total / seeds.clone().count() as f64);
    }
    let decreasing = mean_tv.windows(2).all(|w| w[1] < w[0]);
    Outcome::new(
        decreasing && cmu_ok,
        format!(
            "mean morph TV {:.4} -> {:.4} -> {:.4}; Cmu at T=1e4: {}",
            mean_tv[0],
            mean_tv[1],
            mean_tv[2],
            cmus.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("exact quantities", exact_quantities),
        ("causal-state recovery", causal_state_recovery),
        ("state counts", state_counts),
        ("period-4 diagonal", period4_diagonal),
        ("rrxor incompressibility and mid-curve", rrxor_mid_curve),
        ("oce selection", oce_selection),
        ("correction formula", correction_formula),
        ("property suite", property_suite),
        ("consistency", consistency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
