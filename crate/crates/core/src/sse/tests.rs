use super::*;
use crate::exact::ed::{ed_spectrum, ground_state_bond_correlators};
use crate::model::{pattern, Boundary, ChainParams, VertexTable};

fn params(
    n: usize,
    jz: f64,
    dj: f64,
    delta: f64,
    eps: f64,
    beta: f64,
    boundary: Boundary,
) -> ChainParams {
    ChainParams::new(n, jz, dj, delta, eps, 0.0, beta, boundary).unwrap()
}

#[test]
fn init_draws_half_filling() {
    let p = params(4, 0.0, 0.0, 0.0, 0.5, 1.0, Boundary::Open);
    let cfg = SseConfig::init(&p, 16, 1).unwrap();
    assert_eq!(cfg.alpha.iter().filter(|&&u| u).count(), 2);
    assert_eq!(cfg.n_operators(), 0);
    assert!(cfg.ops.iter().all(|o| o.is_identity()));
}

#[test]
fn init_is_deterministic() {
    let p = params(8, 0.3, 0.1, 0.2, 0.5, 2.0, Boundary::Periodic);
    let a = SseConfig::init(&p, 16, 42).unwrap();
    let b = SseConfig::init(&p, 16, 42).unwrap();
    assert_eq!(a.alpha, b.alpha);
    let c = SseConfig::init(&p, 16, 43).unwrap();
    assert!(a.alpha != c.alpha || a.rng != c.rng);
}

#[test]
fn init_rejects_odd_sites_and_zero_m() {
    assert!(ChainParams::new(5, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, Boundary::Open).is_err());
    let p = params(4, 0.0, 0.0, 0.0, 0.5, 1.0, Boundary::Open);
    assert!(SseConfig::init(&p, 0, 1).is_err());
}

#[test]
fn tiny_beta_keeps_sequence_empty() {
    let p = params(6, 0.4, 0.0, 0.0, 0.5, 1e-12, Boundary::Open);
    let vt = VertexTable::build(&p).unwrap();
    let mut cfg = SseConfig::init(&p, 64, 7).unwrap();
    for _ in 0..200 {
        cfg.diagonal_update(&vt, &p).unwrap();
    }
    assert_eq!(cfg.n_operators(), 0);
}

#[test]
fn zero_weight_diagonal_never_inserted() {
    // eps = 0, jz = 0: every diagonal vertex weight vanishes.
    let p = params(6, 0.0, 0.0, 0.3, 0.0, 5.0, Boundary::Periodic);
    let vt = VertexTable::build(&p).unwrap();
    let mut cfg = SseConfig::init(&p, 64, 3).unwrap();
    for _ in 0..500 {
        cfg.diagonal_update(&vt, &p).unwrap();
    }
    assert_eq!(cfg.n_operators(), 0);
}

#[test]
fn truncation_growth_rule() {
    let p = params(6, 0.5, 0.0, 0.0, 0.5, 4.0, Boundary::Open);
    let mut cfg = SseConfig::init(&p, 100, 1).unwrap();
    // n = 0: unchanged.
    cfg.adjust_truncation();
    assert_eq!(cfg.m(), 100);
    // Synthetic n = 80 with diagonal placeholders: M -> ceil(320/3) = 107.
    for p in 0..80 {
        cfg.ops[p] = Op::new(KIND_DIAGONAL, 0);
    }
    cfg.n = 80;
    cfg.adjust_truncation();
    assert_eq!(cfg.m(), 107);
    assert_eq!(cfg.ops.iter().filter(|o| !o.is_identity()).count(), 80);
    // Repeated calls never shrink.
    let m = cfg.m();
    cfg.adjust_truncation();
    assert!(cfg.m() >= m);
}

#[test]
fn winding_zero_without_offdiagonals_and_under_obc() {
    let p = params(6, 0.5, 0.0, 0.2, 0.5, 4.0, Boundary::Open);
    let cfg = SseConfig::init(&p, 32, 1).unwrap();
    assert_eq!(cfg.measure_winding().unwrap(), 0);

    let p = params(6, 0.1, 0.0, 0.3, 0.5, 20.0, Boundary::Open);
    let vt = VertexTable::build(&p).unwrap();
    let mut cfg = SseConfig::init(&p, 32, 5).unwrap();
    for _ in 0..300 {
        cfg.diagonal_update(&vt, &p).unwrap();
        cfg.adjust_truncation();
        if cfg.n_operators() > 0 {
            cfg.directed_loop_update(&vt, 100_000).unwrap();
        }
        assert_eq!(cfg.measure_winding().unwrap(), 0);
    }
}

#[test]
fn prewound_start_carries_requested_winding() {
    let p = params(8, 0.1, 0.0, 0.3, 0.5, 10.0, Boundary::Periodic);
    for w in [-2i64, 1, 3] {
        let cfg = SseConfig::init_in_sector(&p, 16, 9, 0, w).unwrap();
        assert_eq!(cfg.measure_winding().unwrap(), w);
        cfg.check_periodicity().unwrap();
        assert_eq!((cfg.n_left + cfg.n_right) % 2, 0);
    }
}

#[test]
fn heat_bath_exit_weights_match_hand_enumeration() {
    // Entering the hop-right vertex at the lower-left leg.
    // jz = 0.1, dj = 0, delta = 0.3, eps = 0: candidates {w3, w14, w12, 0}
    // = {0.65, 0.05, 0, 0}; bounce probability 0.65/0.70.
    let p = params(6, 0.1, 0.0, 0.3, 0.0, 10.0, Boundary::Periodic);
    let vt = VertexTable::build(&p).unwrap();
    let pats = vt.patterns(1);
    let entrance = 0u8;
    let legs = pattern::HOP_RIGHT;
    let mut w = [0.0f64; 4];
    for (x, wx) in w.iter_mut().enumerate() {
        *wx = pats[(legs ^ (1 << entrance) ^ (1 << x)) as usize];
    }
    let mut sorted = w;
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert!((sorted[0] - 0.65).abs() < 1e-12);
    assert!((sorted[1] - 0.05).abs() < 1e-12);
    assert_eq!(&sorted[2..], &[0.0, 0.0]);
    let total: f64 = w.iter().sum();
    assert!((w[entrance as usize] / total - 0.65 / 0.70).abs() < 1e-12);

    // Same vertex with eps = 0.5: candidates {0.65, 0.55, 0.5, 0};
    // bounce probability 0.65 / 1.70.
    let p = params(6, 0.1, 0.0, 0.3, 0.5, 10.0, Boundary::Periodic);
    let vt = VertexTable::build(&p).unwrap();
    let pats = vt.patterns(1);
    let mut w = [0.0f64; 4];
    for (x, wx) in w.iter_mut().enumerate() {
        *wx = pats[(legs ^ (1 << entrance) ^ (1 << x)) as usize];
    }
    let total: f64 = w.iter().sum();
    assert!((total - 1.70).abs() < 1e-12);
    assert!((w[entrance as usize] / total - 0.65 / 1.70).abs() < 1e-12);
}

fn thermal_oracle(p: &ChainParams, sector: i64) -> f64 {
    let d = ed_spectrum(p, 0.0, sector).unwrap();
    let (e, imag_ratio) = d.thermal_energy(p.beta);
    assert!(imag_ratio < 1e-8);
    assert!(e.im.abs() < 1e-8);
    e.re
}

#[test]
fn two_site_ring_exchange_energy() {
    // Two-site open XX chain at beta = 100: E = -1/2.
    let p = params(2, 0.0, 0.0, 0.0, 0.5, 100.0, Boundary::Open);
    let sched = RunSchedule {
        therm_sweeps: 500,
        sample_sweeps: 4_000,
        ..Default::default()
    };
    let rec = run_chain(&p, &sched, 11).unwrap();
    let (e, err) = measure_energy(&rec, &p).unwrap();
    assert!(
        (e + 0.5).abs() < (3.0 * err).max(0.02),
        "E = {e} +- {err}, expected -0.5"
    );
}

#[test]
fn hermitian_xx_energy_matches_ed() {
    let p = params(4, 0.0, 0.0, 0.0, 0.5, 4.0, Boundary::Open);
    let sched = RunSchedule {
        therm_sweeps: 1_000,
        sample_sweeps: 20_000,
        ..Default::default()
    };
    let rec = run_chain(&p, &sched, 17).unwrap();
    let (e, err) = measure_energy(&rec, &p).unwrap();
    let oracle = thermal_oracle(&p, 0);
    assert!(
        (e - oracle).abs() < 3.0 * err.max(1e-3),
        "E = {e} +- {err}, ED {oracle}"
    );
}

#[test]
fn detailed_balance_vertex_frequencies_match_ed() {
    // delta = 0 regression at N = 6: energy and per-bond operator counts
    // against the ED ground state (beta large enough to project).
    let p = params(6, 0.5, 0.2, 0.0, 0.5, 24.0, Boundary::Open);
    let sched = RunSchedule {
        therm_sweeps: 2_000,
        sample_sweeps: 30_000,
        ..Default::default()
    };
    let rec = run_chain(&p, &sched, 23).unwrap();
    let (e, err) = measure_energy(&rec, &p).unwrap();
    let oracle = thermal_oracle(&p, 0);
    assert!((e - oracle).abs() < 3.0 * err.max(1e-3), "E = {e}+-{err} vs {oracle}");

    // <n_{2,b}>/beta = w2(b) <S+_b S-_{b+1}> and the hop-left/right twins
    // coincide for delta = 0 (Hermitian detailed balance).
    let corr = ground_state_bond_correlators(&p, 0.0, 0).unwrap();
    for b in 0..p.n_bonds() {
        let (w2, w3) = p.offdiagonal_weights(b + 1);
        let n2 = rec.mean_op_count(2, b) / p.beta;
        let n3 = rec.mean_op_count(3, b) / p.beta;
        let expect2 = w2 * corr.pm[b];
        let expect3 = w3 * corr.mp[b];
        assert!(
            (n2 - expect2).abs() < 0.03 * expect2.abs().max(0.05),
            "bond {b}: n2/beta = {n2}, expected {expect2}"
        );
        assert!(
            (n3 - expect3).abs() < 0.03 * expect3.abs().max(0.05),
            "bond {b}: n3/beta = {n3}, expected {expect3}"
        );
    }
}

#[test]
fn operator_count_scales_with_beta() {
    let sched = RunSchedule {
        therm_sweeps: 1_000,
        sample_sweeps: 8_000,
        ..Default::default()
    };
    let p1 = params(6, 0.5, 0.0, 0.2, 0.5, 8.0, Boundary::Open);
    let p2 = params(6, 0.5, 0.0, 0.2, 0.5, 16.0, Boundary::Open);
    let r1 = run_chain(&p1, &sched, 31).unwrap();
    let r2 = run_chain(&p2, &sched, 37).unwrap();
    let ratio = r2.mean_n() / r1.mean_n();
    assert!((ratio - 2.0).abs() < 0.1, "n(2 beta)/n(beta) = {ratio}");
}

#[test]
fn fixed_seed_reproduces_record_exactly() {
    let p = params(8, 0.3, 0.1, 0.25, 0.5, 6.0, Boundary::Periodic);
    let sched = RunSchedule {
        therm_sweeps: 300,
        sample_sweeps: 1_500,
        ..Default::default()
    };
    let a = run_chain(&p, &sched, 99).unwrap();
    let b = run_chain(&p, &sched, 99).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn epsilon_invariance_of_energy() {
    let sched = RunSchedule {
        therm_sweeps: 2_000,
        sample_sweeps: 25_000,
        ..Default::default()
    };
    let pa = params(6, 0.3, 0.2, 0.3, 0.5, 12.0, Boundary::Periodic);
    let pb = params(6, 0.3, 0.2, 0.3, 1.0, 12.0, Boundary::Periodic);
    let ra = run_chain(&pa, &sched, 41).unwrap();
    let rb = run_chain(&pb, &sched, 43).unwrap();
    let (ea, sa) = measure_energy(&ra, &pa).unwrap();
    let (eb, sb) = measure_energy(&rb, &pb).unwrap();
    let sigma = (sa * sa + sb * sb).sqrt();
    assert!(
        (ea - eb).abs() < 3.0 * sigma.max(1e-3),
        "eps=0.5: {ea}+-{sa}, eps=1.0: {eb}+-{sb}"
    );
}

#[test]
fn invariants_hold_across_sweeps() {
    let p = params(8, 0.2, 0.1, 0.3, 0.5, 10.0, Boundary::Periodic);
    let vt = VertexTable::build(&p).unwrap();
    let mut cfg = SseConfig::init(&p, 32, 53).unwrap();
    let sz0 = cfg.total_sz();
    for _ in 0..60 {
        cfg.diagonal_update(&vt, &p).unwrap();
        cfg.adjust_truncation();
        if cfg.n_operators() > 0 {
            cfg.build_links().unwrap();
            for _ in 0..4 {
                cfg.one_loop(&vt, 100 * cfg.m());
            }
            cfg.write_back_ops().unwrap();
        }
        cfg.check_periodicity().unwrap();
        assert_eq!((cfg.n_left + cfg.n_right) % 2, 0, "n2 + n3 must stay even");
        assert_eq!(
            (cfg.n_right - cfg.n_left).rem_euclid(p.n_sites as i64),
            0
        );
        assert_eq!(cfg.total_sz(), sz0, "loops must conserve the sector");
        cfg.measure_winding().unwrap();
    }
}

#[test]
fn checkpoint_round_trip_reproduces_continuation() {
    let p = params(6, 0.4, 0.1, 0.2, 0.5, 8.0, Boundary::Periodic);
    let vt = VertexTable::build(&p).unwrap();
    let mut cfg = SseConfig::init(&p, 32, 61).unwrap();
    for _ in 0..50 {
        cfg.diagonal_update(&vt, &p).unwrap();
        cfg.adjust_truncation();
        if cfg.n_operators() > 0 {
            cfg.directed_loop_update(&vt, 100_000).unwrap();
        }
    }
    let mut blob = Vec::new();
    cfg.save_checkpoint(&mut blob).unwrap();
    let mut restored = SseConfig::load_checkpoint(&mut blob.as_slice()).unwrap();

    // Continue both for 50 sweeps; every step must agree exactly.
    for _ in 0..50 {
        cfg.diagonal_update(&vt, &p).unwrap();
        restored.diagonal_update(&vt, &p).unwrap();
        if cfg.n_operators() > 0 {
            cfg.directed_loop_update(&vt, 100_000).unwrap();
        }
        if restored.n_operators() > 0 {
            restored.directed_loop_update(&vt, 100_000).unwrap();
        }
        assert_eq!(cfg.alpha, restored.alpha);
        assert_eq!(cfg.ops, restored.ops);
        assert_eq!(cfg.n, restored.n);
        assert_eq!(cfg.rng, restored.rng);
    }
}

#[test]
fn merge_is_associative_and_commutative() {
    let p = params(6, 0.2, 0.0, 0.2, 0.5, 6.0, Boundary::Periodic);
    let sched = RunSchedule {
        therm_sweeps: 200,
        sample_sweeps: 500,
        ..Default::default()
    };
    let r1 = run_chain(&p, &sched, 1).unwrap();
    let r2 = run_chain(&p, &sched, 2).unwrap();
    let r3 = run_chain(&p, &sched, 3).unwrap();

    let mut ab_c = MeasurementRecord::new(p.n_sites, p.n_bonds());
    ab_c.merge(&r1).unwrap();
    ab_c.merge(&r2).unwrap();
    ab_c.merge(&r3).unwrap();

    let mut c_ba = MeasurementRecord::new(p.n_sites, p.n_bonds());
    c_ba.merge(&r3).unwrap();
    c_ba.merge(&r2).unwrap();
    c_ba.merge(&r1).unwrap();

    assert_eq!(
        serde_json::to_string(&ab_c).unwrap(),
        serde_json::to_string(&c_ba).unwrap()
    );

    // Duplicate seeds are refused.
    let mut dup = MeasurementRecord::new(p.n_sites, p.n_bonds());
    dup.merge(&r1).unwrap();
    assert!(dup.merge(&r1).is_err());
}
