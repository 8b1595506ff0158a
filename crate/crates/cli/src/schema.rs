//! Column layout of the files written by `simulate`. `docs/schemas.md` documents the same
//! layout and a test keeps the two in step.

pub const SCHEMA_VERSION: u32 = 1;

pub const SPECTRA_HEADER: &str = "window_end,pulsation,band,amplitude_x,amplitude_y";

/// `trace.csv` header for `n` rotors. Per-rotor columns are one-based.
pub fn trace_header(n: usize) -> String {
    let mut cols: Vec<String> = [
        "time", "cycle", "phase", "stage", "pin_motor", "pin_lift", "x", "y", "z", "x_ref", "y_ref", "z_ref", "roll",
        "pitch", "yaw", "yaw_ref", "vx", "vy", "vz", "p", "q", "r",
    ]
    .map(String::from)
    .to_vec();
    for prefix in ["omega", "pwm", "lift_cmd"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend(
        [
            "acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z", "r_fd", "r_fdi", "slack", "vib_x",
            "vib_y",
        ]
        .map(String::from),
    );
    cols.join(",")
}
