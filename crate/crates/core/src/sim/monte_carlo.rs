use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimation::SystemModel;
use crate::mdp::Policy;

use super::episode::{run_episode, EpisodeOptions, Trace};
use super::scenario::RunSpec;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of episode `episode`: the `episode`-th output of a SplitMix64
/// stream started at `master`.
pub fn episode_seed(master: u64, episode: u64) -> u64 {
    let mut z = master.wrapping_add(episode.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    /// One-based link number.
    pub link: usize,
    pub mean_covariance: f64,
    pub mean_power_watt: f64,
    pub mean_squared_error: f64,
    pub mean_kappa: f64,
    pub delivery_rate: f64,
    /// 95% half-widths over runs; absent with a single run.
    pub covariance_half_width: Option<f64>,
    pub power_half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub runs: usize,
    pub horizon: usize,
    pub burn_in: usize,
    pub links: Vec<LinkSummary>,
    /// Sum of the per-link mean covariances.
    pub network_covariance: f64,
    /// Sum of the per-link mean powers.
    pub network_power_watt: f64,
    pub network_covariance_half_width: Option<f64>,
    pub network_power_half_width: Option<f64>,
}

// time averages of one episode for one link
#[derive(Debug, Clone, Copy, Default)]
struct EpisodeMeans {
    covariance: f64,
    power: f64,
    squared_error: f64,
    kappa: f64,
    delivered: f64,
}

fn episode_means(trace: &Trace, burn_in: usize) -> Vec<EpisodeMeans> {
    (0..trace.links)
        .map(|l| {
            let mut acc = EpisodeMeans::default();
            let mut n = 0usize;
            for r in trace.link(l).skip(burn_in) {
                acc.covariance += r.covariance;
                acc.power += r.power_watt;
                acc.squared_error += r.error() * r.error();
                acc.kappa += r.kappa;
                acc.delivered += f64::from(u8::from(r.delivered));
                n += 1;
            }
            let n = n as f64;
            EpisodeMeans {
                covariance: acc.covariance / n,
                power: acc.power / n,
                squared_error: acc.squared_error / n,
                kappa: acc.kappa / n,
                delivered: acc.delivered / n,
            }
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `1.96 · s / √n` with the unbiased sample deviation.
pub fn half_width(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some(1.96 * var.sqrt() / (n as f64).sqrt())
}

fn run_all(policy: &Policy, systems: &[SystemModel], run: &RunSpec) -> Result<Vec<Trace>> {
    let one = |e: usize| {
        run_episode(policy, systems, run.horizon, episode_seed(run.seed, e as u64), EpisodeOptions::default())
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..run.runs).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..run.runs).map(one).collect()
    }
}

/// Runs `run.runs` independent episodes and averages covariance and power
/// over time and runs. Traces are returned in episode order when
/// `keep_traces` is set.
pub fn monte_carlo(
    policy: &Policy,
    systems: &[SystemModel],
    run: &RunSpec,
    keep_traces: bool,
) -> Result<(MonteCarloSummary, Vec<Trace>)> {
    run.validate()?;
    let traces = run_all(policy, systems, run)?;
    let per_run: Vec<Vec<EpisodeMeans>> = traces.iter().map(|t| episode_means(t, run.burn_in)).collect();
    let links = systems.len();

    let column = |l: usize, f: fn(&EpisodeMeans) -> f64| per_run.iter().map(|r| f(&r[l])).collect::<Vec<_>>();
    let link_summaries: Vec<LinkSummary> = (0..links)
        .map(|l| {
            let cov = column(l, |m| m.covariance);
            let pow = column(l, |m| m.power);
            LinkSummary {
                link: l + 1,
                mean_covariance: mean(&cov),
                mean_power_watt: mean(&pow),
                mean_squared_error: mean(&column(l, |m| m.squared_error)),
                mean_kappa: mean(&column(l, |m| m.kappa)),
                delivery_rate: mean(&column(l, |m| m.delivered)),
                covariance_half_width: half_width(&cov),
                power_half_width: half_width(&pow),
            }
        })
        .collect();

    let run_totals = |f: fn(&EpisodeMeans) -> f64| per_run.iter().map(|r| r.iter().map(f).sum()).collect::<Vec<f64>>();
    let summary = MonteCarloSummary {
        runs: run.runs,
        horizon: run.horizon,
        burn_in: run.burn_in,
        network_covariance: link_summaries.iter().map(|s| s.mean_covariance).sum(),
        network_power_watt: link_summaries.iter().map(|s| s.mean_power_watt).sum(),
        network_covariance_half_width: half_width(&run_totals(|m| m.covariance)),
        network_power_half_width: half_width(&run_totals(|m| m.power)),
        links: link_summaries,
    };
    Ok((summary, if keep_traces { traces } else { Vec::new() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::tests::circular3;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..1000).map(|e| episode_seed(42, e)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 1000);
        // first output of SplitMix64 seeded with 0
        assert_eq!(episode_seed(0, 0), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn half_width_oracle() {
        assert_eq!(half_width(&[3.0]), None);
        // s = 1 for {1,2,3}
        let hw = half_width(&[1.0, 2.0, 3.0]).unwrap();
        assert!((hw - 1.96 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_run_is_trace_average() {
        let sc = circular3(10.0);
        let solved = sc.solve().unwrap();
        let run = RunSpec { horizon: 40, runs: 1, seed: 3, burn_in: 5 };
        let (sum, traces) = monte_carlo(&solved.policy, &sc.systems, &run, true).unwrap();
        let t = &traces[0];
        for l in 0..3 {
            let rows: Vec<_> = t.link(l).skip(5).collect();
            let p = rows.iter().map(|r| r.covariance).sum::<f64>() / rows.len() as f64;
            let w = rows.iter().map(|r| r.power_watt).sum::<f64>() / rows.len() as f64;
            assert!((sum.links[l].mean_covariance - p).abs() <= 1e-12 * p);
            assert!((sum.links[l].mean_power_watt - w).abs() <= 1e-12 * w);
        }
        assert_eq!(sum.network_power_half_width, None);
    }

    #[test]
    fn doubling_runs_keeps_prefix() {
        let sc = circular3(10.0);
        let solved = sc.solve().unwrap();
        let small = RunSpec { horizon: 30, runs: 3, seed: 11, burn_in: 0 };
        let big = RunSpec { runs: 6, ..small };
        let (_, a) = monte_carlo(&solved.policy, &sc.systems, &small, true).unwrap();
        let (_, b) = monte_carlo(&solved.policy, &sc.systems, &big, true).unwrap();
        assert_eq!(a[..], b[..3]);
    }

    #[test]
    fn network_sums_equal_parts() {
        let sc = circular3(10.0);
        let solved = sc.solve().unwrap();
        let (sum, traces) = monte_carlo(&solved.policy, &sc.systems, &sc.run, false).unwrap();
        assert!(traces.is_empty());
        let p: f64 = sum.links.iter().map(|s| s.mean_covariance).sum();
        let w: f64 = sum.links.iter().map(|s| s.mean_power_watt).sum();
        assert_eq!(p, sum.network_covariance);
        assert_eq!(w, sum.network_power_watt);
        let again = monte_carlo(&solved.policy, &sc.systems, &sc.run, false).unwrap().0;
        assert_eq!(again, sum);
    }

    #[test]
    fn symmetric_links_agree() {
        let mut sc = circular3(10.0);
        sc.topology = crate::sim::TopologySpec::Circular { links: 2, d1: 10.0, d2: 10.0 };
        sc.systems.truncate(2);
        sc.noise_watt.truncate(2);
        sc.grid.truncate(2);
        sc.kappa_levels = vec![crate::power_control::uniform_levels(8); 2];
        sc.run = RunSpec { horizon: 200, runs: 40, seed: 5, burn_in: 0 };
        // in-place sweeps visit links asymmetrically; Jacobi keeps J symmetric
        sc.solver.update_mode = crate::mdp::UpdateMode::Snapshot;
        sc.solver.epsilon = 1e-9;
        let solved = sc.solve().unwrap();
        let (sum, _) = monte_carlo(&solved.policy, &sc.systems, &sc.run, false).unwrap();
        let (x, y) = (&sum.links[0], &sum.links[1]);
        let tol = x.covariance_half_width.unwrap() + y.covariance_half_width.unwrap();
        assert!((x.mean_covariance - y.mean_covariance).abs() <= tol);
        let tol = x.power_half_width.unwrap() + y.power_half_width.unwrap();
        assert!((x.mean_power_watt - y.mean_power_watt).abs() <= tol);
    }
}
