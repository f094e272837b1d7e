use super::{timed, CriterionReport, Tolerances};
use crate::commands::{simulate, SimulateOptions};
use crate::spec::RunSpec;
use std::path::PathBuf;

/// Small sweeps of both schemes used for the replay check.
pub fn replay_spec_json(kind: &str) -> String {
    let (scheme, experiment) = match kind {
        "binned" => (
            r#"{"kind": "binned", "rates": [[0.2, 0.2], [0.3, 0.1]], "epsilons": {"epsilon": 1.2}}"#,
            r#"{"n_list": [6], "L_list": [1, 2], "trials": 48, "seed": 99, "delta_list": [0.1, 0.3]}"#,
        ),
        _ => (
            r#"{"kind": "direct", "rates": [0.2, 0.4], "epsilons": {"epsilon": 0.4, "slacks": [0.05]}}"#,
            r#"{"n_list": [12, 24], "L_list": [1, 3], "trials": 64, "seed": 99, "delta_list": [0.1, 0.2]}"#,
        ),
    };
    format!(
        r#"{{
  "alphabets": {{"x_size": 2, "y_size": 2}},
  "source": {{"p0": [0.5, 0.5], "obs_channel": [[0.9, 0.1], [0.1, 0.9]]}},
  "target": {{"p_y_given_x": [[0.8, 0.2], [0.2, 0.8]]}},
  "scheme": {scheme},
  "experiment": {experiment}
}}
"#
    )
}

fn simulate_bytes(spec: &RunSpec, workers: usize, tag: &str) -> Result<Vec<u8>, String> {
    let path: PathBuf =
        std::env::temp_dir().join(format!("coordsim-replay-{}-{tag}-{workers}.csv", std::process::id()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    let result = pool.install(|| simulate(spec, &path, &SimulateOptions::default(), &mut std::io::sink()));
    let bytes = result
        .map_err(|e| e.to_string())
        .and_then(|_| std::fs::read(&path).map_err(|e| e.to_string()));
    let _ = std::fs::remove_file(&path);
    bytes
}

/// Replaying a sweep gives byte-identical CSV under 1 and 4 workers.
pub fn criterion_9(tol: &Tolerances) -> CriterionReport {
    timed(
        9,
        "simulate replays byte-identically across worker counts",
        120.0,
        tol,
        || {
            let mut notes = Vec::new();
            let mut ok = true;
            for kind in ["direct", "binned"] {
                let spec = match RunSpec::from_json(&replay_spec_json(kind)) {
                    Ok(s) => s,
                    Err(e) => return (false, format!("{kind} spec: {e}")),
                };
                let runs: Result<Vec<Vec<u8>>, String> = [1usize, 4, 1, 4]
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| simulate_bytes(&spec, w, &format!("{kind}{i}")))
                    .collect();
                match runs {
                    Ok(r) => {
                        let same = r.windows(2).all(|w| w[0] == w[1]);
                        ok &= same;
                        notes.push(format!(
                            "{kind}: {} bytes {}",
                            r[0].len(),
                            if same { "identical" } else { "DIFFER" }
                        ));
                    }
                    Err(e) => {
                        ok = false;
                        notes.push(format!("{kind}: {e}"));
                    }
                }
            }
            (ok, notes.join(", "))
        },
    )
}
