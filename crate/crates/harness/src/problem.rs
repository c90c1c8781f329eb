//! Turning a configuration into concrete sets and a starting point.

use feaslift::rng::{normal_matrix, normal_vector, stream};
use feaslift::{MatrixPoint, Point, SetDescriptor};

use crate::config::{parse_set, ExperimentConfig, Problem};
use crate::error::{validation, HResult, HarnessError};

/// RNG stream holding the dictionary `W`.
const STREAM_DICTIONARY: u64 = 0;
/// RNG stream holding the initial iterate.
const STREAM_START: u64 = 1;

#[derive(Debug, Clone)]
pub struct Instance {
    pub sets: Vec<SetDescriptor>,
    pub names: Vec<String>,
    pub x0: Point,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.x0.dim()
    }
}

/// Builds the sets and starting point; depends only on the problem and seed,
/// never on the method.
pub fn build_instance(cfg: &ExperimentConfig) -> HResult<Instance> {
    match &cfg.problem {
        Problem::SignalCompression { n, m, d, alpha } => {
            let (sets, x0) = signal_compression(*n, *m, *d, *alpha, cfg.seed)?;
            Ok(Instance { sets, names: cfg.set_names(), x0 })
        }
        Problem::Custom { sets, x0 } => {
            let sets = sets.iter().map(|s| parse_set(s)).collect::<HResult<Vec<_>>>()?;
            let n = sets[0].ambient_dim();
            if let Some(bad) = sets.iter().find(|s| s.ambient_dim() != n) {
                return Err(HarnessError::Validation(format!(
                    "sets live in different dimensions: {} and {}",
                    n,
                    bad.ambient_dim()
                )));
            }
            let x0 = match x0 {
                Some(v) => Point::from_slice(v).map_err(validation)?,
                None => Point::from_vector(normal_vector(&mut stream(cfg.seed, STREAM_START), n)).map_err(validation)?,
            };
            if x0.dim() != n {
                return Err(HarnessError::Validation(format!("x0 has dimension {}, sets have {n}", x0.dim())));
            }
            Ok(Instance { sets, names: cfg.set_names(), x0 })
        }
    }
}

/// The compressed-sensing style instance on `d x m` matrices:
///
/// * `L`: matrices whose rows lie in the row space of `W in R^{n x m}`,
/// * `M`: matrices with orthonormal rows,
/// * `C`: matrices with entries in `[-alpha, alpha]`.
///
/// `W` and `U_0` have i.i.d. standard normal entries, each from its own seeded stream.
pub fn signal_compression(n: usize, m: usize, d: usize, alpha: f64, seed: u64) -> HResult<(Vec<SetDescriptor>, Point)> {
    let w = normal_matrix(&mut stream(seed, STREAM_DICTIONARY), n, m);
    let u0 = normal_matrix(&mut stream(seed, STREAM_START), d, m);
    let sets = vec![
        SetDescriptor::affine_row_space(w, d).map_err(validation)?,
        SetDescriptor::orthonormal_rows(d, m).map_err(validation)?,
        SetDescriptor::inf_box_matrix(alpha, d, m).map_err(validation)?,
    ];
    let x0 = MatrixPoint::from_matrix(&u0).map_err(validation)?.into_point();
    Ok((sets, x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    #[test]
    fn preset_data_depends_only_on_seed_and_dims() {
        let (s1, a) = signal_compression(6, 10, 2, 0.1, 3).unwrap();
        let (s2, b) = signal_compression(6, 10, 2, 0.1, 3).unwrap();
        let (_, c) = signal_compression(6, 10, 2, 0.1, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(s1, s2);
        assert_ne!(a, c);
        assert_eq!(a.dim(), 20);

        let base = "preset = \"signal-compression\"\nn = 6\nm = 10\nd = 2\nseed = 3\n";
        let i1 = build_instance(&RawConfig::from_toml(base).unwrap().resolve().unwrap()).unwrap();
        let i2 = build_instance(
            &RawConfig::from_toml(&format!("{base}method = \"reduced-avg-proj\"\ncoordinator = \"L\""))
                .unwrap()
                .resolve()
                .unwrap(),
        )
        .unwrap();
        assert_eq!(i1.x0, i2.x0);
        assert_eq!(i1.sets, i2.sets);
    }

    #[test]
    fn custom_dimension_checks() {
        let cfg = RawConfig::from_toml("sets = [\"full n=2\", \"zero n=3\"]").unwrap().resolve().unwrap();
        assert!(build_instance(&cfg).is_err());
        let cfg = RawConfig::from_toml("sets = [\"full n=2\"]\nx0 = [1.0]").unwrap().resolve().unwrap();
        assert!(build_instance(&cfg).is_err());
        let cfg = RawConfig::from_toml("sets = [\"full n=2\"]").unwrap().resolve().unwrap();
        assert_eq!(build_instance(&cfg).unwrap().dim(), 2);
    }
}
