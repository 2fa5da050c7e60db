#![no_main]

use libfuzzer_sys::fuzz_target;
use wslchain::measurement::{grouped_statistics, Estimator, ShotRecord};
use wslchain::model::Axis;

fuzz_target!(|input: &str| {
    let Ok(record) = ShotRecord::from_text(input) else {
        return;
    };
    assert_eq!(ShotRecord::from_text(&record.to_text()).unwrap(), record);
    for site in 1..=record.n_sites() {
        if record.basis[site - 1] == Axis::Z {
            if let Ok(est) = grouped_statistics(&record, Estimator::SiteDensity(site)) {
                assert!((0.0..=1.0).contains(&est.mean));
            }
        }
    }
});
