//! End-to-end run of the construction and certification pipeline on the
//! power-tail law, plus exact-vs-Monte-Carlo agreement on short horizons.

use bpve_core::construct::build_schedule;
use bpve_core::offspring::OffspringLaw;
use bpve_core::simulate::{simulate_bpve, McConfig};
use bpve_core::survival::{bpve_survival_exact, SurvivalTable};
use bpve_core::verify::{verification_report, BlockStatus, CiStatus, VerifyOptions};

fn pipeline(blocks: u32, horizon: usize) -> (OffspringLaw, SurvivalTable, bpve_core::Schedule) {
    let f = OffspringLaw::power_tail(0.5, 1.5).unwrap();
    let g = f.criticalize().unwrap();
    let table = SurvivalTable::build(&g, horizon, 1e-9).unwrap();
    let schedule = build_schedule(&f, &table, blocks).unwrap();
    (f, table, schedule)
}

#[test]
fn power_tail_three_blocks_certify() {
    let (f, table, schedule) = pipeline(3, 10_000);
    let report =
        verification_report(&f, &schedule, &table, &VerifyOptions::default()).unwrap();

    assert!(report.all_certified());
    assert_eq!(report.condition_ii.blocks.len(), 3);

    // the full inequality chain per block: exact <= bound < 2^-n
    let mut last_exact = f64::INFINITY;
    for b in &report.condition_ii.blocks {
        assert_eq!(b.status, BlockStatus::Certified);
        let bound = b.bound.expect("within horizon");
        assert!(bound < b.threshold, "block {}: {bound} !< {}", b.block, b.threshold);
        let exact = b.exact_survival.expect("within generation budget");
        assert!(exact <= bound, "block {}: exact {exact} above bound {bound}", b.block);
        // survival probabilities fall from block to block
        assert!(exact <= last_exact, "exact survival not monotone at block {}", b.block);
        last_exact = exact;
    }

    // condition (i): finite part plus a finite tail bound
    assert_eq!(report.condition_i.status, CiStatus::Certified);
    assert!(report.condition_i.partial_sum.is_finite());
    assert!(report.condition_i.infinite_tail_bound.is_finite());
    assert!(
        (report.condition_i.partial_sum
            - (report.condition_i.growth_contribution
                + report.condition_i.critical_contribution))
            .abs()
            <= 1e-12 * report.condition_i.partial_sum
    );

    // closed form against brute force over the built span
    assert_eq!(report.cross_check.status, CiStatus::Certified);
    assert!(report.cross_check.rel_diff <= 1e-9);
}

#[test]
fn report_is_deterministic() {
    let (f1, t1, s1) = pipeline(3, 5_000);
    let (f2, t2, s2) = pipeline(3, 5_000);
    assert_eq!(s1, s2);
    let r1 = verification_report(&f1, &s1, &t1, &VerifyOptions::default()).unwrap();
    let r2 = verification_report(&f2, &s2, &t2, &VerifyOptions::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&r1).unwrap(),
        serde_json::to_string(&r2).unwrap()
    );
}

#[test]
fn schedule_feeds_simulation() {
    // retentions drawn straight from the schedule: early generations are
    // pure growth, so survival to a short horizon is frequent
    let (f, _, schedule) = pipeline(2, 5_000);
    let horizon = 20u64.min(schedule.span_u64().unwrap());
    let cfg = McConfig::new(20_000, 99, horizon);
    let out = simulate_bpve(&f, &schedule, &cfg).unwrap();
    let ps: Vec<f64> = (1..=horizon)
        .map(|n| schedule.retention_at(n).unwrap())
        .collect();
    let exact = bpve_survival_exact(&f, &ps).unwrap();
    let sigma = (exact * (1.0 - exact) / 20_000.0).sqrt();
    assert!(
        (out.summary.frequency - exact).abs() < 3.0 * sigma,
        "simulated {} vs exact {exact}",
        out.summary.frequency
    );
}

#[test]
fn exact_matches_monte_carlo_on_mixed_sequences() {
    // agreement between the exact recursion and simulation for several laws
    // and retention sequences up to 50 generations
    let cases: Vec<(OffspringLaw, Vec<f64>)> = vec![
        (
            OffspringLaw::finite(vec![0.0, 0.0, 1.0]).unwrap(),
            vec![0.6; 30],
        ),
        (
            // three growth generations, then critical: E Z_n stays at 8
            OffspringLaw::geometric(2.0).unwrap(),
            (1..=50).map(|n| if n <= 3 { 1.0 } else { 0.5 }).collect(),
        ),
        (
            OffspringLaw::power_tail(0.5, 1.5).unwrap(),
            (1..=40).map(|n| if n <= 4 { 1.0 } else { 2.0 / 3.0 }).collect(),
        ),
        (
            OffspringLaw::finite(vec![0.1, 0.3, 0.2, 0.4]).unwrap(),
            vec![0.55; 25],
        ),
    ];
    for (i, (law, ps)) in cases.iter().enumerate() {
        let exact = bpve_survival_exact(law, ps).unwrap();
        let cfg = McConfig::new(100_000, 1000 + i as u64, ps.len() as u64);
        let out = simulate_bpve(law, ps, &cfg).unwrap();
        let sigma = (exact * (1.0 - exact) / 100_000.0).sqrt();
        assert!(
            (out.summary.frequency - exact).abs() < 3.0 * sigma,
            "case {i}: {} vs exact {exact}",
            out.summary.frequency
        );
    }
}

#[test]
fn five_blocks_certify_at_default_horizon() {
    // the thresholds certify through block 5 at H = 10^4, and the schedule
    // span passes 10^4 generations, exercising the cross-check at scale
    let (f, table, _) = pipeline(1, 10_000);
    let s = build_schedule(&f, &table, 5).unwrap();
    assert_eq!(s.blocks().len(), 5);
    for w in s.blocks().windows(2) {
        assert!(w[1].t > w[0].u);
        assert!(w[1].m_exponent > w[0].m_exponent);
    }
    let span = s.span_u64().unwrap();
    assert!(span > 10_000, "span {span}");
    let report = verification_report(&f, &s, &table, &VerifyOptions::default()).unwrap();
    assert!(report.all_certified());
    assert_eq!(report.cross_check.generations, 10_000);
    assert!(report.cross_check.rel_diff <= 1e-9);
    // and directly over the full span
    let closed = bpve_core::verify::condition_i_partial(&s, span).unwrap();
    let brute =
        bpve_core::verify::condition_i_bruteforce(s.m(), &s, span, 100_000).unwrap();
    assert!(((closed - brute) / brute).abs() <= 1e-9);
}

#[test]
fn percolation_matches_population_for_heavy_tails() {
    let f = OffspringLaw::power_tail(0.5, 1.5).unwrap();
    let ps: Vec<f64> = (1..=10)
        .map(|n| if n <= 2 { 1.0 } else { 2.0 / 3.0 })
        .collect();
    let reps = 50_000u64;
    let bp = simulate_bpve(&f, &ps, &McConfig::new(reps, 61, 10)).unwrap();
    let pc = bpve_core::simulate::simulate_percolation(&f, &ps, 10, &McConfig::new(reps, 62, 0))
        .unwrap();
    let pooled = (bp.summary.survivals + pc.summary.survivals) as f64 / (2 * reps) as f64;
    let z = (bp.summary.frequency - pc.summary.frequency).abs()
        / (pooled * (1.0 - pooled) * 2.0 / reps as f64).sqrt();
    assert!(z < 4.0, "two-proportion z = {z}");
    // both agree with the exact recursion as well
    let exact = bpve_survival_exact(&f, &ps).unwrap();
    let sigma = (exact * (1.0 - exact) / reps as f64).sqrt();
    assert!((bp.summary.frequency - exact).abs() < 3.0 * sigma);
    assert!((pc.summary.frequency - exact).abs() < 3.0 * sigma);
}
