//! Writes the shipped data files under `data/` from their builders.

use std::fs;
use std::path::Path;

use serde::Serialize;
use wiretap_core::game::examples;
use wiretap_core::instances::*;

fn write<T: Serialize>(root: &Path, rel: &str, v: &T) {
    let path = root.join(rel);
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    fs::write(&path, s).unwrap();
    println!("{}", path.display());
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    write(&root, "channels/noiseless_binary.json", &noiseless_binary());
    write(
        &root,
        "channels/binary_symmetric_wiretap.json",
        &binary_symmetric_wiretap(0.05, 0.2),
    );
    write(
        &root,
        "channels/state_masked_wiretap.json",
        &state_masked_wiretap(0.05, 0.2),
    );
    write(&root, "channels/erasure_broadcast.json", &erasure_broadcast());
    write(&root, "configs/simulate_binary.json", &binary_sim_config(64));
    write(
        &root,
        "configs/simulate_violation.json",
        &violation_sim_config(32, 0.2).unwrap(),
    );
    write(
        &root,
        "configs/encode_correlated.json",
        &correlated_aux_config(-0.2, 64, 40),
    );
    write(&root, "configs/equivocation.json", &equivocation_config());
    write(&root, "configs/covering_above.json", &covering_input(0.3));
    write(&root, "configs/covering_below.json", &covering_input(-0.2));
    write(&root, "configs/gaussian_default.json", &gaussian_params(0.1));
    write(&root, "games/perfect_monitoring.json", &examples::perfect_monitoring());
    write(&root, "games/blind.json", &examples::blind());
    write(&root, "games/noisy.json", &examples::noisy());
    write(&root, "games/constant.json", &examples::constant(3.0));
}
