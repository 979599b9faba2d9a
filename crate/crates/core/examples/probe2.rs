// Scratch: bounce sensitivity for the Table-I point at eps = 0.
use nhsse::model::{Boundary, ChainParams};
use nhsse::sse::{measure_energy, run_chain, RunSchedule};
use nhsse::winding::{ergodicity_report, WindingHistogram};

fn main() {
    let p = ChainParams::new(10, 0.1, 0.0, 0.3, 0.0, 0.0, 100.0, Boundary::Periodic).unwrap();
    for (label, therm, sweeps, w0, seed) in [
        ("w0 short", 4_000usize, 20_000usize, 0i64, 1u64),
        ("w0 long", 20_000, 100_000, 0, 1),
        ("w10 start", 4_000, 30_000, 10, 2),
        ("w10 long", 20_000, 100_000, 10, 3),
    ] {
        let sched = RunSchedule {
            therm_sweeps: therm,
            sample_sweeps: sweeps,
            start_winding: w0,
            ..Default::default()
        };
        let t = std::time::Instant::now();
        let rec = run_chain(&p, &sched, seed).unwrap();
        let rep = ergodicity_report(&rec).unwrap();
        let h = WindingHistogram::from_record(&rec);
        let (e, err) = measure_energy(&rec, &p).unwrap();
        let wmin = h.counts.keys().min().unwrap();
        let wmax = h.counts.keys().max().unwrap();
        let wpeak = h.counts.iter().max_by_key(|(_, &c)| c).unwrap().0;
        println!(
            "{label}: bounce={:.4} R={:.5} E={e:.4}+-{err:.4} w in [{wmin},{wmax}] peak {wpeak} trans={} [{:.0}s]",
            rep.bounce,
            rep.r_nonzero,
            rec.dw_pos + rec.dw_neg,
            t.elapsed().as_secs_f64()
        );
    }
}
