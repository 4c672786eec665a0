//! Monte Carlo engines: population-level branching trajectories and vertex
//! percolation on lazily sampled Galton-Watson trees.
//!
//! Replicates are independent tasks. Each owns a private generator seeded by
//! [`derive_replicate_seed`], and the only shared state is commutative
//! counters, so summaries are bit-identical regardless of how replicates are
//! partitioned across workers. Install a scoped rayon pool to pin the worker
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::construct::RetentionSource;
use crate::error::{Error, Result};
use crate::offspring::{OffspringLaw, Sampler};

/// Monte Carlo run parameters.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub replicates: u64,
    pub master_seed: u64,
    /// Generations to simulate; a replicate survives if `Z_horizon > 0`.
    pub horizon: u64,
    /// Declare-alive cutoff: a population above this is counted as surviving
    /// and flagged truncated. 0 disables the cap.
    pub population_cap: u64,
    pub record_trajectories: bool,
}

impl McConfig {
    pub fn new(replicates: u64, master_seed: u64, horizon: u64) -> Self {
        McConfig {
            replicates,
            master_seed,
            horizon,
            population_cap: 0,
            record_trajectories: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        Ok(())
    }
}

/// Survival frequency with its exact (Clopper-Pearson) 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub replicates: u64,
    pub survivals: u64,
    pub frequency: f64,
    #[serde(rename = "ci95")]
    pub ci95_halfwidth: f64,
    pub truncated: u64,
    pub master_seed: u64,
}

/// One recorded population trajectory; `sizes[n]` is `Z_n`, starting at
/// `Z_0 = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub replicate: u64,
    pub sizes: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct McOutput {
    pub summary: McSummary,
    pub trajectories: Option<Vec<Trajectory>>,
}

/// Deterministic, collision-free seed for one replicate: a bijective mix of
/// the master seed and the replicate index, so distinct indices can never
/// share a stream.
pub fn derive_replicate_seed(master_seed: u64, replicate_index: u64) -> u64 {
    let mut z = master_seed ^ replicate_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Population-level simulation: `Z_0 = 1`,
/// `Z_{n+1} = sum of thinned offspring draws of the Z_n individuals`.
pub fn simulate_bpve(
    f: &OffspringLaw,
    retentions: &(impl RetentionSource + ?Sized),
    cfg: &McConfig,
) -> Result<McOutput> {
    cfg.validate()?;
    let ps = prefetch(retentions, cfg.horizon)?;
    for &p in &ps {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::RetentionOutOfRange(p));
        }
    }
    let sampler = f.sampler();
    if cfg.record_trajectories {
        let runs: Vec<(bool, bool, Vec<u64>)> = (0..cfg.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = replicate_rng(cfg.master_seed, i);
                run_bpve(&sampler, &ps, cfg.population_cap, true, &mut rng)
            })
            .collect();
        let survivals = runs.iter().filter(|r| r.0).count() as u64;
        let truncated = runs.iter().filter(|r| r.1).count() as u64;
        let trajectories = runs
            .into_iter()
            .enumerate()
            .map(|(i, (_, _, sizes))| Trajectory {
                replicate: i as u64,
                sizes,
            })
            .collect();
        Ok(McOutput {
            summary: summarize(cfg, survivals, truncated),
            trajectories: Some(trajectories),
        })
    } else {
        let (survivals, truncated) = (0..cfg.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = replicate_rng(cfg.master_seed, i);
                let (s, t, _) = run_bpve(&sampler, &ps, cfg.population_cap, false, &mut rng);
                (s as u64, t as u64)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        Ok(McOutput {
            summary: summarize(cfg, survivals, truncated),
            trajectories: None,
        })
    }
}

/// Vertex percolation on lazily sampled Galton-Watson trees: the root
/// (generation 0) is always retained, a vertex in generation `n` is retained
/// with probability `p_n`, and the replicate survives iff some root-to-depth
/// path of retained vertices exists. Retentions of 0 are allowed here.
///
/// Subtrees hanging off removed vertices are never sampled, and the search
/// exits on the first witness path.
pub fn simulate_percolation(
    f: &OffspringLaw,
    retentions: &(impl RetentionSource + ?Sized),
    depth: u64,
    cfg: &McConfig,
) -> Result<McOutput> {
    cfg.validate()?;
    let ps = prefetch(retentions, depth)?;
    for &p in &ps {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::RetentionOutOfRange(p));
        }
    }
    let sampler = f.sampler();
    let survivals = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(cfg.master_seed, i);
            run_percolation(&sampler, &ps, depth, &mut rng) as u64
        })
        .sum::<u64>();
    Ok(McOutput {
        summary: summarize(cfg, survivals, 0),
        trajectories: None,
    })
}

fn prefetch(retentions: &(impl RetentionSource + ?Sized), horizon: u64) -> Result<Vec<f64>> {
    (1..=horizon)
        .map(|n| {
            retentions.retention(n).map_err(|e| match e {
                Error::OutOfSpan { span, .. } => Error::HorizonBeyondSpan { horizon, span },
                other => other,
            })
        })
        .collect()
}

fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_replicate_seed(master_seed, index))
}

fn run_bpve(
    sampler: &Sampler,
    ps: &[f64],
    cap: u64,
    record: bool,
    rng: &mut ChaCha8Rng,
) -> (bool, bool, Vec<u64>) {
    let mut z: u64 = 1;
    let mut sizes = if record {
        let mut v = Vec::with_capacity(ps.len() + 1);
        v.push(1);
        v
    } else {
        Vec::new()
    };
    for &p in ps {
        let mut next: u64 = 0;
        for _ in 0..z {
            next = next.saturating_add(sampler.sample_retained(p, rng));
        }
        z = next;
        if record {
            sizes.push(z);
        }
        if z == 0 {
            return (false, false, sizes);
        }
        if cap > 0 && z > cap {
            return (true, true, sizes);
        }
    }
    (true, false, sizes)
}

fn run_percolation(sampler: &Sampler, ps: &[f64], depth: u64, rng: &mut ChaCha8Rng) -> bool {
    if depth == 0 {
        return true;
    }
    // stack of (generation, children of one parent not yet examined);
    // depth-first so a witness path is reached without exploring siblings
    let mut stack: Vec<(u64, u64)> = vec![(1, sampler.sample(rng))];
    while let Some((gen, remaining)) = stack.pop() {
        if remaining == 0 {
            continue;
        }
        stack.push((gen, remaining - 1));
        let retained = rng.random::<f64>() < ps[(gen - 1) as usize];
        if retained {
            if gen == depth {
                return true;
            }
            stack.push((gen + 1, sampler.sample(rng)));
        }
    }
    false
}

fn summarize(cfg: &McConfig, survivals: u64, truncated: u64) -> McSummary {
    McSummary {
        replicates: cfg.replicates,
        survivals,
        frequency: survivals as f64 / cfg.replicates as f64,
        ci95_halfwidth: clopper_pearson_halfwidth(survivals, cfg.replicates),
        truncated,
        master_seed: cfg.master_seed,
    }
}

/// Half-width of the exact binomial (Clopper-Pearson) 95% interval.
fn clopper_pearson_halfwidth(k: u64, n: u64) -> f64 {
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64)
            .expect("valid beta shapes")
            .inverse_cdf(0.025)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64)
            .expect("valid beta shapes")
            .inverse_cdf(0.975)
    };
    (hi - lo) / 2.0
}

/// CSV export of recorded trajectories with columns `replicate,n,Z_n`.
pub fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let mut s = String::from("replicate,n,Z_n\n");
    for t in trajectories {
        for (n, z) in t.sizes.iter().enumerate() {
            s.push_str(&format!("{},{n},{z}\n", t.replicate));
        }
    }
    s
}
