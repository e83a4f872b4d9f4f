#![no_main]
use libfuzzer_sys::fuzz_target;
use regimelab::io::{read_trajectory_csv, trajectory_metadata, write_trajectory_csv};
use regimelab::Component;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(parsed) = read_trajectory_csv(text) else { return };
    let Ok(traj) = parsed.to_trajectory() else { return };
    if !traj.t0.is_finite() || !traj.dt.is_finite() || traj.diverged_at.is_some_and(|k| k >= traj.len()) {
        return;
    }
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &Component::ALL, &trajectory_metadata(&traj), &mut buf).expect("write to memory");
    let back = read_trajectory_csv(std::str::from_utf8(&buf).unwrap()).expect("own output parses");
    let back = back.to_trajectory().expect("own output rebuilds");
    let bits = |t: &regimelab::Trajectory| -> Vec<u64> {
        t.samples.iter().flat_map(|s| s.to_array()).map(f64::to_bits).collect()
    };
    assert_eq!(bits(&back), bits(&traj));
});
