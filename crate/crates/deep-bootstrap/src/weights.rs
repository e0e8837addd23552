//! Bootstrap weight generation.
//!
//! Posterior draws are indexed by nonnegative weight vectors on a scaled
//! simplex. The subgroup bootstrap draws `S` weights from `S x Dir(1,..,1)`
//! and replicates each within a contiguous block of observations, so the
//! generator network only has to read an `S`-dimensional input. The
//! nonparametric-learning variant appends `S'` pseudo-data subgroups whose
//! Dirichlet concentration `alpha/n'` carries the prior mass.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// A Dirichlet on the simplex scaled to total mass `scale`.
#[derive(Debug, Clone)]
pub struct DirichletSpec {
    pub concentration: Vec<f64>,
    pub scale: f64,
}

impl DirichletSpec {
    /// `m x Dir(1,...,1)` — the exchangeable bootstrap weight law.
    pub fn symmetric(m: usize) -> Self {
        Self {
            concentration: vec![1.0; m],
            scale: m as f64,
        }
    }
}

/// One bootstrap weight draw: the compact subgroup weights actually drawn,
/// their per-observation expansion, and the observation-to-subgroup map.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub compact: Vec<f64>,
    pub expanded: Vec<f64>,
    pub group_map: Vec<usize>,
}

/// Draws `scale * (g_1,...,g_m) / sum(g)` with `g_i ~ Gamma(conc_i, 1)`.
pub fn draw_dirichlet<R: Rng + ?Sized>(spec: &DirichletSpec, rng: &mut R) -> Result<Vec<f64>> {
    if spec.concentration.is_empty() {
        return Err(Error::invalid("empty Dirichlet concentration"));
    }
    if spec.concentration.iter().any(|&c| c <= 0.0 || !c.is_finite()) {
        return Err(Error::invalid("Dirichlet concentrations must be positive"));
    }
    if spec.concentration.len() == 1 {
        return Ok(vec![spec.scale]);
    }
    let mut out = Vec::with_capacity(spec.concentration.len());
    let mut total = 0.0;
    for &c in &spec.concentration {
        // Marsaglia-Tsang, with the u^(1/a) boost for shape < 1.
        let g = Gamma::new(c, 1.0)
            .map_err(|e| Error::invalid(format!("gamma shape {c}: {e}")))?
            .sample(rng);
        total += g;
        out.push(g);
    }
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "all gamma variates underflowed to zero".into(),
        ));
    }
    for g in &mut out {
        *g = spec.scale * *g / total;
    }
    Ok(out)
}

/// Block sizes for `s` subgroups over `n` observations. Equi-sized when `s`
/// divides `n`; otherwise every block has floor(n/s) members and the last
/// absorbs the remainder.
pub fn group_sizes(n: usize, s: usize) -> Result<Vec<usize>> {
    if s == 0 || s > n {
        return Err(Error::invalid(format!(
            "subgroup count {s} must be in 1..={n}"
        )));
    }
    let base = n / s;
    let mut sizes = vec![base; s];
    *sizes.last_mut().unwrap() += n - base * s;
    Ok(sizes)
}

/// Replicates compact weights over contiguous blocks.
pub fn expand(compact: &[f64], sizes: &[usize]) -> (Vec<f64>, Vec<usize>) {
    debug_assert_eq!(compact.len(), sizes.len());
    let total = sizes.iter().sum();
    let mut expanded = Vec::with_capacity(total);
    let mut group_map = Vec::with_capacity(total);
    for (j, (&w, &len)) in compact.iter().zip(sizes).enumerate() {
        for _ in 0..len {
            expanded.push(w);
            group_map.push(j);
        }
    }
    (expanded, group_map)
}

/// Subgroup bootstrap weights for Gibbs-posterior learning:
/// compact ~ `S x Dir(1,...,1)`, expanded over blocks of `n` observations.
pub fn gibbs_weights<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<WeightVector> {
    let sizes = group_sizes(n, s)?;
    let compact = draw_dirichlet(&DirichletSpec::symmetric(s), rng)?;
    let (expanded, group_map) = expand(&compact, &sizes);
    Ok(WeightVector {
        compact,
        expanded,
        group_map,
    })
}

/// Concatenated observed + pseudo weights for Bayesian NPL:
/// compact ~ `(S+S') x Dir(1,...,1, alpha/n',...,alpha/n')`, the first `S`
/// blocks expanded over the `n` observed points and the last `S'` over the
/// `n'` pseudo points. `alpha = 0` degenerates the pseudo block to zero
/// weight (the Bayesian-bootstrap special case).
pub fn npl_weights<R: Rng + ?Sized>(
    n: usize,
    n_prime: usize,
    s: usize,
    s_prime: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<WeightVector> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!(
            "concentration alpha must be nonnegative, got {alpha}"
        )));
    }
    let obs_sizes = group_sizes(n, s)?;
    let pseudo_sizes = group_sizes(n_prime, s_prime)?;

    if alpha == 0.0 {
        // Pseudo weights vanish; observed block is a plain scaled Dirichlet.
        let mut compact = draw_dirichlet(&DirichletSpec::symmetric(s), rng)?;
        compact.extend(std::iter::repeat(0.0).take(s_prime));
        let mut sizes = obs_sizes;
        sizes.extend_from_slice(&pseudo_sizes);
        let (expanded, group_map) = expand(&compact, &sizes);
        return Ok(WeightVector {
            compact,
            expanded,
            group_map,
        });
    }

    let mut concentration = vec![1.0; s];
    concentration.extend(std::iter::repeat(alpha / n_prime as f64).take(s_prime));
    let spec = DirichletSpec {
        concentration,
        scale: (s + s_prime) as f64,
    };
    let compact = draw_dirichlet(&spec, rng)?;
    let mut sizes = obs_sizes;
    sizes.extend_from_slice(&pseudo_sizes);
    let (expanded, group_map) = expand(&compact, &sizes);
    Ok(WeightVector {
        compact,
        expanded,
        group_map,
    })
}

/// Dumps compact weight draws to CSV, one row per draw (debugging aid).
pub fn write_draws_csv(path: &Path, draws: &[WeightVector]) -> Result<()> {
    use std::io::Write;
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    for d in draws {
        let row = d
            .compact
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(file, "{row}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_component_is_the_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = DirichletSpec {
            concentration: vec![3.7],
            scale: 42.0,
        };
        assert_eq!(draw_dirichlet(&spec, &mut rng).unwrap(), vec![42.0]);
    }

    #[test]
    fn rejects_nonpositive_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = DirichletSpec {
            concentration: vec![1.0, 0.0],
            scale: 2.0,
        };
        assert!(draw_dirichlet(&spec, &mut rng).is_err());
    }

    #[test]
    fn coordinate_means_match_dirichlet_moment() {
        // m = 100, conc = 1, scale = 100: every coordinate has mean 1.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let spec = DirichletSpec::symmetric(100);
        let reps = 100_000;
        let mut sums = vec![0.0; 100];
        for _ in 0..reps {
            let d = draw_dirichlet(&spec, &mut rng).unwrap();
            for (s, x) in sums.iter_mut().zip(&d) {
                *s += x;
            }
        }
        for s in sums {
            assert!((s / reps as f64 - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn dir11_marginal_is_uniform() {
        // Dir(1,1) scaled by 2: first coordinate over 2 is U(0,1).
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let spec = DirichletSpec::symmetric(2);
        let reps = 100_000;
        let mut us: Vec<f64> = (0..reps)
            .map(|_| draw_dirichlet(&spec, &mut rng).unwrap()[0] / 2.0)
            .collect();
        us.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let n = reps as f64;
        let mut ks = 0.0f64;
        for (i, u) in us.iter().enumerate() {
            ks = ks.max((u - i as f64 / n).abs());
            ks = ks.max((u - (i + 1) as f64 / n).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn gibbs_weights_identity_grouping() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = gibbs_weights(4, 4, &mut rng).unwrap();
        assert_eq!(w.compact, w.expanded);
        let total: f64 = w.expanded.iter().sum();
        assert!((total - 4.0).abs() < 1e-9);
        assert_eq!(w.group_map, vec![0, 1, 2, 3]);
    }

    #[test]
    fn expansion_replicates_within_blocks() {
        let (expanded, map) = expand(&[1.5, 0.5], &[3, 3]);
        assert_eq!(expanded, vec![1.5, 1.5, 1.5, 0.5, 0.5, 0.5]);
        assert_eq!(map, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn remainder_goes_to_last_group() {
        assert_eq!(group_sizes(7, 3).unwrap(), vec![2, 2, 3]);
        assert_eq!(group_sizes(100, 100).unwrap(), vec![1; 100]);
        assert!(group_sizes(4, 5).is_err());
    }

    #[test]
    fn npl_pseudo_mass_matches_analytic_mean() {
        // Total compact pseudo mass has mean
        // (S+S') * (S' a/n') / (S + S' a/n').
        let (n, n_prime, s, s_prime, alpha) = (50, 10, 10, 5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reps = 100_000;
        let mut total = 0.0;
        for _ in 0..reps {
            let w = npl_weights(n, n_prime, s, s_prime, alpha, &mut rng).unwrap();
            total += w.compact[s..].iter().sum::<f64>();
        }
        let mean = total / reps as f64;
        let conc_pseudo = s_prime as f64 * alpha / n_prime as f64;
        let analytic = (s + s_prime) as f64 * conc_pseudo / (s as f64 + conc_pseudo);
        assert!(
            (mean - analytic).abs() / analytic < 0.01,
            "mean {mean} vs analytic {analytic}"
        );
    }

    #[test]
    fn alpha_zero_degenerates_to_bayesian_bootstrap() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w = npl_weights(20, 20, 4, 2, 0.0, &mut rng).unwrap();
        assert_eq!(w.compact.len(), 6);
        assert!(w.compact[4..].iter().all(|&x| x == 0.0));
        assert!(w.expanded[20..].iter().all(|&x| x == 0.0));
        let obs: f64 = w.compact[..4].iter().sum();
        assert!((obs - 4.0).abs() < 1e-9);
        assert!(npl_weights(20, 20, 4, 2, -0.5, &mut rng).is_err());
    }

    #[test]
    fn simplex_invariants_hold_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for &(n, s) in &[(4usize, 4usize), (6, 2), (100, 100), (100, 10), (37, 5)] {
            for _ in 0..20 {
                let w = gibbs_weights(n, s, &mut rng).unwrap();
                assert!(w.compact.iter().all(|&x| x >= 0.0));
                let total: f64 = w.compact.iter().sum();
                assert!((total - s as f64).abs() / s as f64 < 1e-9);
                // Group constancy of the expansion.
                for (i, &g) in w.group_map.iter().enumerate() {
                    assert_eq!(w.expanded[i], w.compact[g]);
                }
            }
        }
    }

    #[test]
    fn draws_are_seed_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(123);
        let mut b = ChaCha8Rng::seed_from_u64(123);
        let wa = npl_weights(30, 30, 6, 3, 1.0, &mut a).unwrap();
        let wb = npl_weights(30, 30, 6, 3, 1.0, &mut b).unwrap();
        assert_eq!(wa, wb);
    }
}
