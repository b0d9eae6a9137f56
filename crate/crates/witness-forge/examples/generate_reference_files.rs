use num_complex::Complex64;
use std::fs;
use witness_forge::configs;
use witness_forge::states::StateModel;

fn main() {
    let dir = std::env::args().nth(1).unwrap();
    let write = |name: &str, text: String| {
        fs::write(format!("{dir}/{name}"), text).unwrap();
    };
    write(
        "bell_state.json",
        serde_json::to_string_pretty(&configs::bell_reference_state()).unwrap(),
    );
    write(
        "bell_witness.json",
        serde_json::to_string_pretty(&configs::bell_witness()).unwrap(),
    );
    write(
        "tmsv_state.json",
        serde_json::to_string_pretty(&StateModel::tmsv(Complex64::new(0.5, 0.0))).unwrap(),
    );
    write(
        "tmsv_witness.json",
        serde_json::to_string_pretty(&configs::tmsv_reference_witness()).unwrap(),
    );
    write(
        "subtracted_state_kappa1.json",
        serde_json::to_string_pretty(
            &StateModel::photon_subtracted_tmsv(Complex64::new(0.5, 0.0), 1.0).unwrap(),
        )
        .unwrap(),
    );
    write(
        "subtracted_witness_local.json",
        serde_json::to_string_pretty(&configs::subtracted_local_witness()).unwrap(),
    );
    write(
        "fourmode_cat_state.json",
        serde_json::to_string_pretty(
            &StateModel::noisy_four_mode_cat(Complex64::new(0.4, 0.0), 0.0).unwrap(),
        )
        .unwrap(),
    );
    write(
        "fourmode_witness_fullpartition.json",
        serde_json::to_string_pretty(&configs::FOUR_MODE_CASES[0].witness().unwrap()).unwrap(),
    );
    write(
        "vacuum_state.json",
        serde_json::to_string_pretty(
            &StateModel::coherent_product(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])
                .unwrap(),
        )
        .unwrap(),
    );
    println!("wrote example files to {dir}");
}
