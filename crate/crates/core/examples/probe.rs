//! Throwaway probe: emulate the acceptance protocols against the crate's
//! actual search implementation to measure attainability before the
//! experiment layer is written.

use std::time::Instant;
use trussfly_core::database::ScenarioDatabase;
use trussfly_core::detection::{add_noise, brute_force, detect, NoiseSpec, Weights};
use trussfly_core::firefly::FaParams;
use trussfly_core::rng::Stream;
use trussfly_core::truss::TrussModel;

fn main() {
    let t0 = Instant::now();
    let model = TrussModel::benchmark();
    let db = ScenarioDatabase::build(&model, 8, 2, 5).unwrap();
    println!("db build: {:?} ({} entries)", t0.elapsed(), db.len());
    let w = Weights::uniform(8, db.entries()[0].1.dof_count());

    // --- zero-noise 100-trial protocol ---------------------------------
    let mut stream = Stream::new(20_240_001);
    let mut detect_hits = 0;
    let mut brute_hits = 0;
    let mut obj_match = 0;
    let t1 = Instant::now();
    for t in 0..100u64 {
        let target = db.entries()[1 + stream.index(db.len() - 1)].0.clone();
        let test = db.get(&target).unwrap().clone();
        let fa = FaParams::unit_box(4, 9_000_000 + t);
        let p = detect(&test, &db, &w, &fa).unwrap();
        let b = brute_force(&test, &db, &w).unwrap();
        if p.scenario == target {
            detect_hits += 1;
        }
        if b.scenario == target {
            brute_hits += 1;
        }
        if p.objective == b.objective {
            obj_match += 1;
        }
    }
    println!(
        "zero-noise: detect {detect_hits}/100, brute {brute_hits}/100, obj-equal {obj_match}/100, total {:?}",
        t1.elapsed()
    );

    // --- mode-count N1 (zero-noise) column: 4 mode counts x 3 trials ---
    let mut n1_hits = 0;
    for (ci, m) in [2usize, 4, 6, 8].into_iter().enumerate() {
        let dbm = db.with_mode_count(m).unwrap();
        let wm = Weights::uniform(m, db.entries()[0].1.dof_count());
        for trial in 0..3u64 {
            let mut s = Stream::derived(42, &[10, trial]);
            let target = db.entries()[1 + s.index(db.len() - 1)].0.clone();
            let test = dbm.get(&target).unwrap().clone();
            let fa = FaParams::unit_box(4, 5_000_000 + (ci as u64) * 100 + trial);
            let p = detect(&test, &dbm, &wm, &fa).unwrap();
            if p.scenario == target {
                n1_hits += 1;
            }
        }
    }
    println!("mode-count N1 column: {n1_hits}/12 exact");

    // --- location-only at 13% noise on both, 10 iterations -------------
    let spec13 = NoiseSpec {
        frequency: 0.13,
        mode_shape: 0.13,
    };
    let mut loc_hits = 0;
    let mut brute_loc_hits = 0;
    for iter in 0..10u64 {
        let mut s = Stream::derived(42, &[20, iter]);
        let target = db.entries()[1 + s.index(db.len() - 1)].0.clone();
        let mut noise_stream = Stream::derived(42, &[21, iter]);
        let test = add_noise(db.get(&target).unwrap(), &spec13, &mut noise_stream).unwrap();
        let fa = FaParams::unit_box(4, 6_000_000 + iter);
        let p = detect(&test, &db, &w, &fa).unwrap();
        let bars = |s: &trussfly_core::database::Scenario| {
            s.damaged().iter().map(|d| d.0).collect::<Vec<_>>()
        };
        if bars(&p.scenario) == bars(&target) {
            loc_hits += 1;
        }
        let b = brute_force(&test, &db, &w).unwrap();
        if bars(&b.scenario) == bars(&target) {
            brute_loc_hits += 1;
        }
    }
    println!("location-only @13%: detect {loc_hits}/10, brute-force {brute_loc_hits}/10");
}
