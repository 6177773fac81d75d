use anyhow::Result;
use qppm::qkernel::{min_eigenvalue, Kernel, KernelKind};
use qppm::qsim::oracle::run_dense;
use qppm::qsim::{build_feature_map, kernel_overlap, FeatureMapKind, FeatureMapVariant, ShotConfig, MAX_QUBITS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::UsageError;

/// Dense gate matrices are 4^n complex entries; beyond this the oracle
/// comparison is skipped and only the kernel properties are checked.
const MAX_ORACLE_QUBITS: usize = 10;
const ORACLE_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-8;
const PERTURBATION: f64 = 1e-3;
const GRAM_SAMPLES: usize = 30;

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect()
}

/// Zero-outcome probability of `V(x) V(x2)^dagger` from dense matrices.
fn oracle_overlap(x: &[f64], x2: &[f64], kind: FeatureMapKind) -> Result<f64> {
    let mut circuit = build_feature_map(kind, x)?;
    circuit.extend(&build_feature_map(kind, x2)?.adjoint())?;
    Ok(run_dense(&circuit)[0].norm_sqr())
}

/// Prints one line per map and returns whether every check passed.
pub fn kernel_check(n: usize, map: Option<&str>, samples: usize, perturb: bool, seed: u64) -> Result<bool> {
    if n == 0 || n > MAX_QUBITS {
        return Err(UsageError(format!("--qubits must be in 1..={MAX_QUBITS}, got {n}")).into());
    }
    if samples == 0 {
        return Err(UsageError("--samples must be at least 1".into()).into());
    }
    let kinds: Vec<FeatureMapKind> = match map {
        Some(name) => vec![name.parse()?],
        None => FeatureMapVariant::ALL
            .into_iter()
            .flat_map(|v| [1, 2].map(|layers| FeatureMapKind::new(v, layers)))
            .collect::<qppm::Result<_>>()?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_passed = true;
    for kind in kinds {
        let mut oracle_dev = 0.0f64;
        let mut asymmetry = 0.0f64;
        let mut diagonal_dev = 0.0f64;
        for _ in 0..samples {
            let x = random_point(&mut rng, n);
            let x2 = random_point(&mut rng, n);
            let k = kernel_overlap(&x, &x2, kind, ShotConfig::EXACT)?;
            asymmetry = asymmetry.max((k - kernel_overlap(&x2, &x, kind, ShotConfig::EXACT)?).abs());
            diagonal_dev = diagonal_dev.max((kernel_overlap(&x, &x, kind, ShotConfig::EXACT)? - 1.0).abs());
            if n <= MAX_ORACLE_QUBITS {
                let mut xo = x.clone();
                if perturb {
                    xo[0] += PERTURBATION;
                }
                oracle_dev = oracle_dev.max((k - oracle_overlap(&xo, &x2, kind)?).abs());
            }
        }
        let points: Vec<Vec<f64>> = (0..samples.min(GRAM_SAMPLES)).map(|_| random_point(&mut rng, n)).collect();
        let gram = Kernel::new(KernelKind::Quantum {
            map: kind,
            shots: ShotConfig::EXACT,
        })?
        .gram(&points)?;
        let lambda_min = min_eigenvalue(&gram)?;
        let gram_asym = gram.max_asymmetry();

        let oracle_ok = n > MAX_ORACLE_QUBITS || oracle_dev <= ORACLE_TOL;
        let passed = oracle_ok
            && asymmetry <= SYMMETRY_TOL
            && gram_asym <= SYMMETRY_TOL
            && diagonal_dev <= ORACLE_TOL
            && lambda_min >= PSD_TOL;
        all_passed &= passed;
        let oracle = if n > MAX_ORACLE_QUBITS {
            "skipped".to_owned()
        } else {
            format!("{oracle_dev:.2e}")
        };
        println!(
            "{} {kind} n={n}: oracle {oracle}, symmetry {:.2e}, diagonal {diagonal_dev:.2e}, lambda_min {lambda_min:.3e}",
            if passed { "PASS" } else { "FAIL" },
            asymmetry.max(gram_asym),
        );
    }
    println!("{}", if all_passed { "kernel-check passed" } else { "kernel-check FAILED" });
    Ok(all_passed)
}
