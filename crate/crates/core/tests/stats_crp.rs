mod common;

use std::collections::HashMap;

use crpmap::crp::{crp_log_joint, crp_log_joint_counts, generate_dataset, sample_partition, CrpConfig, GeneratorConfig};
use crpmap::{ng_posterior, rng, NGPrior, Partition, SufficientStats};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::*;

#[test]
fn posterior_matches_deviation_form() {
    let mut r = rng(1);
    for _ in 0..20 {
        let dim = r.random_range(1..=4);
        let prior = NGPrior::new(
            (0..dim).map(|_| r.random_range(-5.0..5.0)).collect(),
            r.random_range(0.01..3.0),
            (0..dim).map(|_| r.random_range(0.1..10.0)).collect(),
            r.random_range(0.5..4.0),
        )
        .unwrap();
        let offset = r.random_range(-100.0..100.0);
        let pts: Vec<Vec<f64>> =
            (0..50).map(|_| (0..dim).map(|_| offset + r.random_range(-2.0..2.0)).collect()).collect();
        let stats = SufficientStats::from_rows(dim, pts.iter().map(|p| p.as_slice())).unwrap();
        let post = ng_posterior(&prior, &stats).unwrap();
        let rows: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let (m, c, b, a) = posterior_from_members(&rows, &prior);
        for d in 0..dim {
            assert!((post.mean[d] - m[d]).abs() <= 1e-8 * m[d].abs().max(1.0));
            assert!((post.rate[d] - b[d]).abs() <= 1e-8 * b[d]);
        }
        assert_eq!(post.mean_scale, c);
        assert_eq!(post.shape, a);
    }
}

proptest! {
    #[test]
    fn remove_undoes_add(
        base in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..20),
        x in prop::collection::vec(-1e3f64..1e3, 3),
    ) {
        let stats = SufficientStats::from_rows(3, base.iter().map(|v| v.as_slice())).unwrap();
        let mut edited = stats.clone();
        edited.add(&x).unwrap();
        edited.remove(&x).unwrap();
        prop_assert_eq!(edited.count, stats.count);
        for (a, b) in edited.sum.iter().zip(&stats.sum).chain(edited.sum_sq.iter().zip(&stats.sum_sq)) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn crp_joint_depends_only_on_sizes(labels in prop::collection::vec(0usize..5, 1..12), seed in 0u64..1000) {
        let p = Partition::from_labels(&labels).unwrap();
        let mut shuffled = labels.clone();
        shuffled.shuffle(&mut rng(seed));
        let q = Partition::from_labels(&shuffled).unwrap();
        let lp = crp_log_joint(&p, 1.7);
        prop_assert!((lp - crp_log_joint(&q, 1.7)).abs() < 1e-12);
        let mut counts = p.counts().to_vec();
        counts.reverse();
        prop_assert!((lp - crp_log_joint_counts(&counts, 1.7)).abs() < 1e-12);
    }
}

#[test]
fn sampler_mean_k_matches_harmonic_sum() {
    let cfg = CrpConfig::new(3.0, 600).unwrap();
    let expected: f64 = (1..=600).map(|i| 3.0 / (3.0 + i as f64 - 1.0)).sum();
    let mut r = rng(2);
    let ks: Vec<f64> = (0..10_000).map(|_| sample_partition(&cfg, &mut r).num_clusters() as f64).collect();
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    let var = ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (ks.len() - 1) as f64;
    let se = (var / ks.len() as f64).sqrt();
    assert!((mean - expected).abs() < 3.0 * se, "mean K {mean}, expected {expected}, se {se}");
}

#[test]
fn sampler_partition_frequencies_pass_chi_squared() {
    let cfg = CrpConfig::new(1.0, 4).unwrap();
    let parts = set_partitions(4);
    let index: HashMap<Vec<usize>, usize> = parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut observed = vec![0.0; parts.len()];
    let mut r = rng(3);
    let draws = 1_000_000;
    for _ in 0..draws {
        let p = sample_partition(&cfg, &mut r);
        observed[index[p.labels()]] += 1.0;
    }
    let stat: f64 = parts
        .iter()
        .zip(&observed)
        .map(|(z, o)| {
            let e = draws as f64 * crp_log_joint_counts(&counts(z), 1.0).exp();
            (o - e) * (o - e) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new((parts.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 0.01, "chi2 = {stat}, p = {p_value}");
}

#[test]
fn generated_clusters_match_their_parameters() {
    let prior = NGPrior::new(vec![1.0, 1.0], 0.1, vec![10.0, 10.0], 1.0).unwrap();
    let mut checked = 0;
    for seed in 0..10 {
        let cfg = GeneratorConfig { crp: CrpConfig::new(3.0, 600).unwrap(), prior: prior.clone(), seed };
        let syn = generate_dataset(&cfg, &mut rng::seeded(seed)).unwrap();
        for (k, members) in syn.partition.members().iter().enumerate() {
            if members.len() < 100 {
                continue;
            }
            let comp = &syn.components[k];
            let n = members.len() as f64;
            for d in 0..2 {
                let xs: Vec<f64> = members.iter().map(|&i| syn.dataset.row(i)[d]).collect();
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let sd = (1.0 / comp.precision[d]).sqrt();
                // 4 standard errors for the mean; variance SE is sd² sqrt(2/(n-1))
                assert!((mean - comp.mean[d]).abs() < 4.0 * sd / n.sqrt());
                assert!((var - sd * sd).abs() < 4.0 * sd * sd * (2.0 / (n - 1.0)).sqrt());
            }
            checked += 1;
        }
    }
    assert!(checked >= 5, "only {checked} clusters with >= 100 members");
}

#[test]
fn benchmark_config_can_produce_many_small_clusters() {
    let prior = NGPrior::new(vec![1.0, 1.0], 0.1, vec![10.0, 10.0], 1.0).unwrap();
    let cfg = GeneratorConfig { crp: CrpConfig::new(3.0, 600).unwrap(), prior, seed: 0 };
    let hit = (0..50).any(|s| {
        let syn = generate_dataset(&cfg, &mut rng::seeded(s)).unwrap();
        let sizes = syn.partition.sorted_sizes();
        (15..=21).contains(&sizes.len()) && *sizes.last().unwrap() == 1
    });
    assert!(hit);
}
