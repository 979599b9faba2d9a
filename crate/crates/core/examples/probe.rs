// Scratch probe for engine calibration; not part of the shipped API.
use nhsse::exact::ed::ed_spectrum;
use nhsse::exact::freefermion::ff_ground_state;
use nhsse::model::{fermion_boundary, Boundary, ChainParams};
use nhsse::sse::{measure_energy, run_chain, MeasurementRecord, RunSchedule};
use nhsse::winding::{ergodicity_report, fit_gaussian_peak, WindingHistogram};

fn main() {
    let t0 = std::time::Instant::now();

    // Case A: Table-I setup, eps = 0 vs eps = 0.5.
    for eps in [0.0, 0.5] {
        let p = ChainParams::new(10, 0.1, 0.0, 0.3, eps, 0.0, 100.0, Boundary::Periodic).unwrap();
        let sched = RunSchedule {
            therm_sweeps: 4_000,
            sample_sweeps: 20_000,
            ..Default::default()
        };
        let t = std::time::Instant::now();
        let rec = run_chain(&p, &sched, 1234).unwrap();
        let (e, err) = measure_energy(&rec, &p).unwrap();
        let d = ed_spectrum(&p, 0.0, 0).unwrap();
        let (eth, _) = d.thermal_energy(p.beta);
        let rep = ergodicity_report(&rec).unwrap();
        let h = WindingHistogram::from_record(&rec);
        let fit = fit_gaussian_peak(&h);
        println!(
            "A eps={eps}: E={e:.4}+-{err:.4} (ED {:.4}) bounce={:.3} R={:.4} w_opt={:.2} width={:.2} aborted={:.4} sector_rej={} hist={:?} [{:.1}s]",
            eth.re,
            rep.bounce,
            rep.r_nonzero,
            fit.w_opt,
            fit.width,
            rep.aborted_fraction,
            rec.loops_sector_rejected,
            h.counts,
            t.elapsed().as_secs_f64()
        );
    }

    // Case B: N = 32 free-fermion benchmark point.
    let p = ChainParams::new(32, 0.0, 0.0, 0.3, 0.5, 0.0, 100.0, Boundary::Periodic).unwrap();
    let sched = RunSchedule {
        therm_sweeps: 3_000,
        sample_sweeps: 10_000,
        ..Default::default()
    };
    let t = std::time::Instant::now();
    let mut merged = MeasurementRecord::new(p.n_sites, p.n_bonds());
    for seed in [7u64, 8, 9] {
        let rec = run_chain(&p, &sched, seed).unwrap();
        merged.merge(&rec).unwrap();
    }
    let (e, err) = measure_energy(&merged, &p).unwrap();
    let bc = fermion_boundary(32, 16, Boundary::Periodic).unwrap();
    let ff = ff_ground_state(&p, bc).unwrap();
    let rep = ergodicity_report(&merged).unwrap();
    let h = WindingHistogram::from_record(&merged);
    let fit = fit_gaussian_peak(&h);
    println!(
        "B: E={e:.4}+-{err:.4} (ff {:.4}) bounce={:.3} R={:.4} w_opt={:.2} width={:.2} mean_n={:.0} [{:.1}s]",
        ff.energy.re,
        rep.bounce,
        rep.r_nonzero,
        fit.w_opt,
        fit.width,
        merged.mean_n(),
        t.elapsed().as_secs_f64()
    );
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
