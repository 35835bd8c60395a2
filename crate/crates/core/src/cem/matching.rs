use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{CemError, CoarseningPlan, Signature};
use crate::features::FeatureMatrix;
use crate::ingest::Dataset;

/// Units sharing one bin signature. Indices refer to
/// [`MatchedSample::unit_ids`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub signature: Signature,
    pub treated: Vec<usize>,
    pub control: Vec<usize>,
    /// Weight of every control member; treated members weigh 1.
    pub control_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub treated_id: String,
    pub control_id: String,
    pub treated: usize,
    pub control: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedSample {
    pub unit_ids: Vec<String>,
    pub treated: Vec<bool>,
    pub signatures: Vec<Signature>,
    /// Retained strata in signature order.
    pub strata: Vec<Stratum>,
    pub n_treated: usize,
    pub n_control: usize,
    pub matched_treated: usize,
    pub matched_control: usize,
    pub l1_before: f64,
    /// Weighted L1 over retained units on the same coarsening.
    pub l1_after: f64,
    /// L1 over retained units ignoring the matching weights.
    pub l1_after_unweighted: f64,
    /// Present once the sample has been pruned to one-to-one pairs.
    pub pairs: Option<Vec<MatchPair>>,
}

fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl MatchedSample {
    /// Forms strata from precomputed signatures, drops strata lacking either
    /// group and assigns matching weights.
    pub fn from_signatures(ids: &[String], signatures: &[Signature], treated: &[bool]) -> Result<Self, CemError> {
        if ids.len() != signatures.len() || ids.len() != treated.len() {
            return Err(CemError::InvalidInput("ids, signatures and labels differ in length".into()));
        }
        let n_treated = treated.iter().filter(|&&t| t).count();
        let n_control = treated.len() - n_treated;
        if n_treated == 0 {
            return Err(CemError::EmptyGroup("treated"));
        }
        if n_control == 0 {
            return Err(CemError::EmptyGroup("control"));
        }
        let mut cells: BTreeMap<&Signature, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (i, sig) in signatures.iter().enumerate() {
            let cell = cells.entry(sig).or_default();
            if treated[i] {
                cell.0.push(i);
            } else {
                cell.1.push(i);
            }
        }
        let strata: Vec<Stratum> = cells
            .into_iter()
            .filter(|(_, (t, c))| !t.is_empty() && !c.is_empty())
            .map(|(sig, (t, c))| Stratum { signature: sig.clone(), treated: t, control: c, control_weight: 0.0 })
            .collect();
        if strata.is_empty() {
            return Err(CemError::NoCommonSupport);
        }
        let (t_sigs, c_sigs): (Vec<&Signature>, Vec<&Signature>) = {
            let t = signatures.iter().zip(treated).filter(|(_, &t)| t).map(|(s, _)| s).collect();
            let c = signatures.iter().zip(treated).filter(|(_, &t)| !t).map(|(s, _)| s).collect();
            (t, c)
        };
        let mut ms = MatchedSample {
            unit_ids: ids.to_vec(),
            treated: treated.to_vec(),
            signatures: signatures.to_vec(),
            strata,
            n_treated,
            n_control,
            matched_treated: 0,
            matched_control: 0,
            l1_before: l1_cells(t_sigs.iter().map(|s| (*s, 1.0)), c_sigs.iter().map(|s| (*s, 1.0))),
            l1_after: 0.0,
            l1_after_unweighted: 0.0,
            pairs: None,
        };
        ms.reweight();
        Ok(ms)
    }

    /// Recomputes matched counts, weights and post-matching L1 from the
    /// current strata.
    fn reweight(&mut self) {
        self.matched_treated = self.strata.iter().map(|s| s.treated.len()).sum();
        self.matched_control = self.strata.iter().map(|s| s.control.len()).sum();
        let ratio = self.matched_control as f64 / self.matched_treated as f64;
        for s in &mut self.strata {
            s.control_weight = s.treated.len() as f64 / s.control.len() as f64 * ratio;
        }
        let sig = |i: usize| &self.signatures[i];
        let weighted = l1_cells(
            self.strata.iter().flat_map(|s| s.treated.iter().map(move |&i| (sig(i), 1.0))),
            self.strata.iter().flat_map(|s| s.control.iter().map(move |&i| (sig(i), s.control_weight))),
        );
        // exact balance up to rounding by construction of the weights
        self.l1_after = if weighted < 1e-12 { 0.0 } else { weighted };
        self.l1_after_unweighted = l1_cells(
            self.strata.iter().flat_map(|s| s.treated.iter().map(move |&i| (sig(i), 1.0))),
            self.strata.iter().flat_map(|s| s.control.iter().map(move |&i| (sig(i), 1.0))),
        );
    }

    /// Matching weight of every unit; 0 for discarded units.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.unit_ids.len()];
        for s in &self.strata {
            for &i in &s.treated {
                w[i] = 1.0;
            }
            for &i in &s.control {
                w[i] = s.control_weight;
            }
        }
        w
    }

    /// Indices of retained units, ascending.
    pub fn matched_units(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.strata.iter().flat_map(|s| s.treated.iter().chain(&s.control).copied()).collect();
        v.sort_unstable();
        v
    }

    pub fn unmatched_treated(&self) -> usize {
        self.n_treated - self.matched_treated
    }

    pub fn unmatched_control(&self) -> usize {
        self.n_control - self.matched_control
    }

    /// `matched X of Y <label> projects`, with thousands separators.
    pub fn summary_line(&self, label: &str) -> String {
        format!("matched {} of {} {label} projects", thousands(self.matched_treated), thousands(self.n_treated))
    }
}

/// Matches units of `d` on exact signature equality under `plan`.
pub fn match_strata(d: &Dataset, plan: &CoarseningPlan, treated: &[bool]) -> Result<MatchedSample, CemError> {
    let ids: Vec<String> = d.projects().iter().map(|p| p.project_id.clone()).collect();
    MatchedSample::from_signatures(&ids, &plan.signatures(d), treated)
}

fn l1_cells<'a>(
    treated: impl Iterator<Item = (&'a Signature, f64)>,
    control: impl Iterator<Item = (&'a Signature, f64)>,
) -> f64 {
    let mut cells: HashMap<&Signature, (f64, f64)> = HashMap::new();
    let (mut wt, mut wc) = (0.0, 0.0);
    for (s, w) in treated {
        cells.entry(s).or_default().0 += w;
        wt += w;
    }
    for (s, w) in control {
        cells.entry(s).or_default().1 += w;
        wc += w;
    }
    if wt <= 0.0 || wc <= 0.0 {
        return f64::NAN;
    }
    let mut diffs: Vec<f64> = cells.values().map(|&(t, c)| (t / wt - c / wc).abs()).collect();
    // fixed summation order keeps the result independent of hash order
    diffs.sort_by(f64::total_cmp);
    (0.5 * diffs.iter().sum::<f64>()).clamp(0.0, 1.0)
}

/// Multivariate L1 imbalance `1/2 sum |f - g|` over signature cells, with
/// `f` and `g` the relative cell frequencies of each group. NaN when a group
/// is empty.
pub fn l1_imbalance(treated: &[Signature], control: &[Signature]) -> f64 {
    l1_cells(treated.iter().map(|s| (s, 1.0)), control.iter().map(|s| (s, 1.0)))
}

/// [`l1_imbalance`] with per-unit weights.
pub fn l1_imbalance_weighted(treated: &[(Signature, f64)], control: &[(Signature, f64)]) -> f64 {
    l1_cells(treated.iter().map(|(s, w)| (s, *w)), control.iter().map(|(s, w)| (s, *w)))
}

/// Greedy one-to-one pruning within each stratum: candidate pairs are taken
/// in ascending Euclidean distance on the rows of `m` (ties by treated id,
/// then control id), each unit at most once. Unpaired units are discarded.
///
/// `m` must hold the min-max normalized matching covariates, one row per
/// unit of `ms` in the same order.
pub fn prune_one_to_one(ms: &MatchedSample, m: &FeatureMatrix) -> Result<MatchedSample, CemError> {
    if m.project_ids() != ms.unit_ids.as_slice() {
        return Err(CemError::InvalidInput("covariate rows do not align with matched units".into()));
    }
    let dist = |a: usize, b: usize| -> f64 {
        m.row(a).iter().zip(m.row(b)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let ids = &ms.unit_ids;
    let mut strata = Vec::new();
    let mut pairs = Vec::new();
    for s in &ms.strata {
        let mut cand: Vec<(f64, usize, usize)> =
            s.treated.iter().flat_map(|&t| s.control.iter().map(move |&c| (dist(t, c), t, c))).collect();
        cand.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| ids[a.1].cmp(&ids[b.1])).then_with(|| ids[a.2].cmp(&ids[b.2]))
        });
        let mut used_t = vec![false; s.treated.len()];
        let mut used_c = vec![false; s.control.len()];
        let pos_t: HashMap<usize, usize> = s.treated.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let pos_c: HashMap<usize, usize> = s.control.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let limit = s.treated.len().min(s.control.len());
        let mut kept = Stratum { signature: s.signature.clone(), treated: vec![], control: vec![], control_weight: 1.0 };
        for (d, t, c) in cand {
            if kept.treated.len() == limit {
                break;
            }
            let (kt, kc) = (pos_t[&t], pos_c[&c]);
            if used_t[kt] || used_c[kc] {
                continue;
            }
            used_t[kt] = true;
            used_c[kc] = true;
            kept.treated.push(t);
            kept.control.push(c);
            pairs.push(MatchPair { treated_id: ids[t].clone(), control_id: ids[c].clone(), treated: t, control: c, distance: d });
        }
        strata.push(kept);
    }
    let mut out = MatchedSample { strata, pairs: Some(pairs), ..ms.clone() };
    out.reweight();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ColumnGroup;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i}")).collect()
    }

    #[test]
    fn hand_l1() {
        let (a, b) = (vec![0u32], vec![1u32]);
        let t = vec![a.clone(), a.clone(), b.clone(), b.clone()];
        let c = vec![a.clone(), b.clone(), b.clone(), b.clone()];
        assert_eq!(l1_imbalance(&t, &c), 0.25);
        assert_eq!(l1_imbalance(&t, &t), 0.0);
        assert_eq!(l1_imbalance(&[a.clone()], &[b.clone()]), 1.0);
        assert!(l1_imbalance(&[], &[a]).is_nan());
    }

    #[test]
    fn single_stratum_pair() {
        let ms = MatchedSample::from_signatures(&ids(2), &[vec![3], vec![3]], &[true, false]).unwrap();
        assert_eq!(ms.strata.len(), 1);
        assert_eq!(ms.weights(), vec![1.0, 1.0]);
        assert_eq!((ms.matched_treated, ms.matched_control), (1, 1));
    }

    #[test]
    fn disjoint_support() {
        let r = MatchedSample::from_signatures(&ids(2), &[vec![0], vec![1]], &[true, false]);
        assert_eq!(r, Err(CemError::NoCommonSupport));
        let r = MatchedSample::from_signatures(&ids(2), &[vec![0], vec![0]], &[true, true]);
        assert_eq!(r, Err(CemError::EmptyGroup("control")));
    }

    #[test]
    fn weights_balance_cells() {
        // stratum A: 1 treated, 2 controls; stratum B: 2 treated, 1 control; C unmatched
        let sigs = vec![vec![0], vec![0], vec![0], vec![1], vec![1], vec![1], vec![2]];
        let treated = [true, false, false, true, true, false, true];
        let ms = MatchedSample::from_signatures(&ids(7), &sigs, &treated).unwrap();
        let w = ms.weights();
        // matched totals: 3 treated, 3 controls
        assert!((w[1] - 0.5).abs() < 1e-15 && (w[5] - 2.0).abs() < 1e-15);
        assert_eq!(w[6], 0.0);
        assert_eq!(ms.l1_after, 0.0);
        assert!(ms.l1_after <= ms.l1_before);
        assert_eq!(ms.unmatched_treated(), 1);
        let control_total: f64 = (0..7).filter(|&i| !treated[i]).map(|i| w[i]).sum();
        assert!((control_total - ms.matched_control as f64).abs() < 1e-12);
    }

    #[test]
    fn summary_line_format() {
        let mut ms = MatchedSample::from_signatures(&ids(2), &[vec![0], vec![0]], &[true, false]).unwrap();
        ms.matched_treated = 7150;
        ms.n_treated = 29013;
        assert_eq!(ms.summary_line("funded"), "matched 7,150 of 29,013 funded projects");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1_000_000), "1,000,000");
    }

    #[test]
    fn pruning_pairs_nearest_first() {
        // one stratum: treated u0 (0.0), u1 (0.9); control u2 (1.0)
        let sigs = vec![vec![0]; 3];
        let ms = MatchedSample::from_signatures(&ids(3), &sigs, &[true, true, false]).unwrap();
        let m = FeatureMatrix::from_rows(ids(3), vec![("x".into(), ColumnGroup::Project)], vec![vec![0.0], vec![0.9], vec![1.0]]);
        let p = prune_one_to_one(&ms, &m).unwrap();
        let pairs = p.pairs.as_ref().unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs[0].treated, pairs[0].control), (1, 2));
        assert!((pairs[0].distance - 0.1).abs() < 1e-12);
        assert_eq!((p.matched_treated, p.matched_control), (1, 1));
        assert_eq!(p.weights(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn pruning_ties_break_on_ids() {
        let sigs = vec![vec![0]; 4];
        let ms = MatchedSample::from_signatures(&ids(4), &sigs, &[true, true, false, false]).unwrap();
        let m = FeatureMatrix::from_rows(ids(4), vec![("x".into(), ColumnGroup::Project)], vec![vec![0.5]; 4]);
        let p = prune_one_to_one(&ms, &m).unwrap();
        let pairs = p.pairs.unwrap();
        assert_eq!(pairs.iter().map(|q| (q.treated, q.control)).collect::<Vec<_>>(), vec![(0, 2), (1, 3)]);
        assert!(pairs.iter().all(|q| q.distance == 0.0));
    }
}
