//! Dense joint distributions over named finite variables and the entropy
//! machinery built on them.
//!
//! All information quantities are in nats. `0 * ln 0` is treated as 0 by
//! continuity.

use crate::error::{Error, Result};

/// Hard cap on table size. The exact analyses this crate performs are all
/// small; anything larger is almost certainly a mistake.
pub const MAX_CELLS: usize = 10_000_000;

/// Probabilities must sum to 1 within this tolerance after construction.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Constructors renormalize when the total deviates by less than this;
/// larger deviations are rejected so badly specified tables fail loudly.
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// Compensated (Kahan) summation. The theorem checks in this crate assert
/// identities at 1e-10 and tighter on tables with millions of cells, which
/// naive accumulation does not reliably support.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// A dense probability table over an ordered list of named finite variables.
///
/// Probabilities are stored row-major in variable order (the last variable
/// varies fastest). Immutable after construction; safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    variables: Vec<(String, usize)>,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Build a distribution, validating shape, nonnegativity, and
    /// normalization. Totals within [`RENORMALIZE_TOL`] of 1 are rescaled;
    /// anything further off is an error.
    pub fn new(variables: Vec<(String, usize)>, probs: Vec<f64>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidDistribution(
                "at least one variable required".into(),
            ));
        }
        for (name, card) in &variables {
            if *card == 0 {
                return Err(Error::InvalidDistribution(format!(
                    "variable `{name}` has cardinality 0"
                )));
            }
        }
        for i in 0..variables.len() {
            for j in i + 1..variables.len() {
                if variables[i].0 == variables[j].0 {
                    return Err(Error::InvalidDistribution(format!(
                        "duplicate variable name `{}`",
                        variables[i].0
                    )));
                }
            }
        }
        let cells: u128 = variables.iter().map(|(_, c)| *c as u128).product();
        if cells > MAX_CELLS as u128 {
            return Err(Error::TableTooLarge {
                cells,
                cap: MAX_CELLS,
            });
        }
        if probs.len() as u128 != cells {
            return Err(Error::InvalidDistribution(format!(
                "expected {cells} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probabilities must be finite and nonnegative, found {p}"
            )));
        }
        let total = kahan_sum(probs.iter().copied());
        let mut probs = probs;
        if (total - 1.0).abs() >= RENORMALIZE_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        // Deviations below the invariant tolerance are left untouched so
        // construction is idempotent across save/load round trips.
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            for p in &mut probs {
                *p /= total;
            }
        }
        Ok(Self { variables, probs })
    }

    /// Internal constructor for tables already known to be valid (e.g. the
    /// result of marginalizing a valid table). Skips renormalization so exact
    /// sums survive.
    pub(crate) fn from_valid_parts(variables: Vec<(String, usize)>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(
            probs.len(),
            variables.iter().map(|(_, c)| c).product::<usize>()
        );
        Self { variables, probs }
    }

    pub fn variables(&self) -> &[(String, usize)] {
        &self.variables
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn axis(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn axes(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.axis(n)).collect()
    }

    /// Row-major strides, the last variable varying fastest.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.variables.len()];
        for i in (0..self.variables.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.variables[i + 1].1;
        }
        strides
    }

    /// Sum out every variable not in `keep`. The kept variables appear in
    /// their original order, so keeping all variables returns the table
    /// unchanged.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointDistribution> {
        if keep.is_empty() {
            return Err(Error::InvalidDistribution(
                "marginalize requires at least one variable to keep".into(),
            ));
        }
        let keep_axes = self.axes(keep)?;
        let mut kept = vec![false; self.variables.len()];
        for a in keep_axes {
            kept[a] = true;
        }
        if kept.iter().all(|k| *k) {
            return Ok(self.clone());
        }

        let out_vars: Vec<(String, usize)> = self
            .variables
            .iter()
            .zip(&kept)
            .filter(|(_, k)| **k)
            .map(|(v, _)| v.clone())
            .collect();
        let out_len: usize = out_vars.iter().map(|(_, c)| c).product();
        // Compensated accumulation per bucket; plain adds drift by ~n * ulp
        // over large dropped axes, which the 1e-12 identity checks downstream
        // cannot absorb.
        let mut out = vec![0.0; out_len];
        let mut comp = vec![0.0; out_len];

        let strides = self.strides();
        // Stride of each kept axis within the output table.
        let mut out_strides = vec![0usize; self.variables.len()];
        let mut acc = 1usize;
        for i in (0..self.variables.len()).rev() {
            if kept[i] {
                out_strides[i] = acc;
                acc *= self.variables[i].1;
            }
        }

        for (idx, p) in self.probs.iter().enumerate() {
            let mut out_idx = 0usize;
            for (axis, stride) in strides.iter().enumerate() {
                if kept[axis] {
                    let coord = (idx / stride) % self.variables[axis].1;
                    out_idx += coord * out_strides[axis];
                }
            }
            let y = p - comp[out_idx];
            let t = out[out_idx] + y;
            comp[out_idx] = (t - out[out_idx]) - y;
            out[out_idx] = t;
        }
        Ok(JointDistribution::from_valid_parts(out_vars, out))
    }

    /// Shannon entropy of the marginal on `vars`, in nats.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        let marginal = self.marginalize(vars)?;
        Ok(-kahan_sum(marginal.probs.iter().map(|&p| plogp(p))))
    }

    /// H(target | given) = H(target, given) - H(given). Tiny negative values
    /// from cancellation are clamped to 0.
    pub fn conditional_entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        for t in target {
            if given.contains(t) {
                return Err(Error::OverlappingSets((*t).to_string()));
            }
        }
        if given.is_empty() {
            return self.entropy(target);
        }
        let both: Vec<&str> = target.iter().chain(given.iter()).copied().collect();
        let h = self.entropy(&both)? - self.entropy(given)?;
        Ok(if h < 0.0 && h > -1e-9 { 0.0 } else { h })
    }

    /// MI(a; b | given) = H(a | given) - H(a | b, given). The result is
    /// nonnegative up to floating-point noise and symmetric in `a`, `b`.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], given: Option<&[&str]>) -> Result<f64> {
        let given = given.unwrap_or(&[]);
        for x in a {
            if b.contains(x) {
                return Err(Error::OverlappingSets((*x).to_string()));
            }
        }
        for x in a.iter().chain(b.iter()) {
            if given.contains(x) {
                return Err(Error::OverlappingSets((*x).to_string()));
            }
        }
        let b_given: Vec<&str> = b.iter().chain(given.iter()).copied().collect();
        Ok(self.conditional_entropy(a, given)? - self.conditional_entropy(a, &b_given)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(vars: &[(&str, usize)], probs: &[f64]) -> JointDistribution {
        JointDistribution::new(
            vars.iter().map(|(n, c)| (n.to_string(), *c)).collect(),
            probs.to_vec(),
        )
        .unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn construction_rejects_bad_tables() {
        let vars = vec![("a".to_string(), 2)];
        assert!(JointDistribution::new(vars.clone(), vec![0.5, 0.4]).is_err());
        assert!(JointDistribution::new(vars.clone(), vec![1.1, -0.1]).is_err());
        assert!(JointDistribution::new(vars.clone(), vec![0.5]).is_err());
        let dup = vec![("a".to_string(), 2), ("a".to_string(), 2)];
        assert!(JointDistribution::new(dup, vec![0.25; 4]).is_err());
    }

    #[test]
    fn construction_renormalizes_tiny_deviations() {
        let vars = vec![("a".to_string(), 2)];
        let d = JointDistribution::new(vars, vec![0.5 + 5e-8, 0.5]).unwrap();
        assert_close(d.probs().iter().sum::<f64>(), 1.0, 1e-12);
    }

    #[test]
    fn construction_rejects_oversized_tables() {
        let vars = vec![("a".to_string(), 5000), ("b".to_string(), 5000)];
        match JointDistribution::new(vars, vec![]) {
            Err(Error::TableTooLarge { .. }) => {}
            other => panic!("expected TableTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn marginalize_uniform_pair() {
        let d = dist(&[("a", 2), ("b", 2)], &[0.25; 4]);
        let m = d.marginalize(&["a"]).unwrap();
        assert_eq!(m.variables(), &[("a".to_string(), 2)]);
        assert_close(m.probs()[0], 0.5, 1e-15);
        assert_close(m.probs()[1], 0.5, 1e-15);
    }

    #[test]
    fn marginalize_all_variables_is_identity() {
        let d = dist(&[("a", 2), ("b", 2)], &[0.1, 0.2, 0.3, 0.4]);
        let m = d.marginalize(&["a", "b"]).unwrap();
        assert_eq!(m, d);
    }

    #[test]
    fn marginalize_hand_summed_rows() {
        // p(a,b) rows (0.1, 0.2 / 0.3, 0.4): p(a) = (0.3, 0.7) by hand.
        let d = dist(&[("a", 2), ("b", 2)], &[0.1, 0.2, 0.3, 0.4]);
        let m = d.marginalize(&["a"]).unwrap();
        assert_close(m.probs()[0], 0.3, 1e-12);
        assert_close(m.probs()[1], 0.7, 1e-12);
    }

    #[test]
    fn marginalize_unknown_variable_names_offender() {
        let d = dist(&[("a", 2)], &[0.5, 0.5]);
        match d.marginalize(&["zz"]) {
            Err(Error::UnknownVariable(name)) => assert_eq!(name, "zz"),
            other => panic!("expected UnknownVariable, got {other:?}"),
        }
    }

    #[test]
    fn marginalize_preserves_original_variable_order() {
        let d = dist(&[("a", 2), ("b", 2), ("c", 2)], &[0.125; 8]);
        let m = d.marginalize(&["c", "a"]).unwrap();
        let names: Vec<&str> = m.variables().iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["a", "c"]);
    }

    #[test]
    fn entropy_uniform_and_point_mass() {
        let d = dist(&[("a", 2)], &[0.5, 0.5]);
        assert_close(d.entropy(&["a"]).unwrap(), std::f64::consts::LN_2, 1e-12);
        let p = dist(&[("a", 3)], &[0.0, 1.0, 0.0]);
        assert_close(p.entropy(&["a"]).unwrap(), 0.0, 1e-15);
    }

    #[test]
    fn entropy_hand_evaluated() {
        // -0.25 ln 0.25 - 0.75 ln 0.75 = 0.562335 by hand.
        let d = dist(&[("a", 2)], &[0.25, 0.75]);
        assert_close(d.entropy(&["a"]).unwrap(), 0.562335, 1e-6);
    }

    #[test]
    fn conditional_entropy_independent_equals_marginal_entropy() {
        // a ~ (0.3, 0.7) independent of b ~ (0.6, 0.4).
        let probs = vec![0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4];
        let d = dist(&[("a", 2), ("b", 2)], &probs);
        let h_cond = d.conditional_entropy(&["a"], &["b"]).unwrap();
        let h = d.entropy(&["a"]).unwrap();
        assert_close(h_cond, h, 1e-12);
    }

    #[test]
    fn conditional_entropy_deterministic_function_is_zero() {
        // b = a.
        let d = dist(&[("a", 2), ("b", 2)], &[0.4, 0.0, 0.0, 0.6]);
        assert_close(d.conditional_entropy(&["b"], &["a"]).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn conditional_entropy_binary_symmetric_channel() {
        // Uniform input, flip probability 0.1: H(out|in) = h(0.1) = 0.325083.
        let d = dist(
            &[("in", 2), ("out", 2)],
            &[0.45, 0.05, 0.05, 0.45],
        );
        assert_close(
            d.conditional_entropy(&["out"], &["in"]).unwrap(),
            0.325083,
            1e-6,
        );
    }

    #[test]
    fn conditional_entropy_rejects_overlap() {
        let d = dist(&[("a", 2), ("b", 2)], &[0.25; 4]);
        assert!(d.conditional_entropy(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn mutual_information_independent_is_zero() {
        let probs = vec![0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4];
        let d = dist(&[("a", 2), ("b", 2)], &probs);
        assert_close(d.mutual_information(&["a"], &["b"], None).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn mutual_information_perfect_copy_is_ln2() {
        let d = dist(&[("a", 2), ("b", 2)], &[0.5, 0.0, 0.0, 0.5]);
        assert_close(
            d.mutual_information(&["a"], &["b"], None).unwrap(),
            std::f64::consts::LN_2,
            1e-12,
        );
    }

    #[test]
    fn mutual_information_rejects_overlap() {
        let d = dist(&[("a", 2), ("b", 2)], &[0.25; 4]);
        assert!(d.mutual_information(&["a"], &["a"], None).is_err());
        assert!(d
            .mutual_information(&["a"], &["b"], Some(&["b"]))
            .is_err());
    }

    #[test]
    fn chain_rule_on_random_tables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let cards = [
                rng.gen_range(2..=3usize),
                rng.gen_range(2..=3usize),
                rng.gen_range(2..=3usize),
                rng.gen_range(2..=3usize),
            ];
            let n: usize = cards.iter().product();
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let d = dist(
                &[("y", cards[0]), ("r", cards[1]), ("x", cards[2]), ("q", cards[3])],
                &probs,
            );
            // MI(Y; {R,X} | Q) = MI(Y; R | Q) + MI(Y; X | R, Q)
            //                  = MI(Y; X | Q) + MI(Y; R | X, Q)
            let lhs = d.mutual_information(&["y"], &["r", "x"], Some(&["q"])).unwrap();
            let rhs1 = d.mutual_information(&["y"], &["r"], Some(&["q"])).unwrap()
                + d.mutual_information(&["y"], &["x"], Some(&["r", "q"])).unwrap();
            let rhs2 = d.mutual_information(&["y"], &["x"], Some(&["q"])).unwrap()
                + d.mutual_information(&["y"], &["r"], Some(&["x", "q"])).unwrap();
            assert_close(lhs, rhs1, 1e-10);
            assert_close(lhs, rhs2, 1e-10);
        }
    }

    #[test]
    fn marginalize_then_entropy_agrees_with_entropy_of_subset() {
        let d = dist(&[("a", 2), ("b", 3)], &[0.1, 0.15, 0.05, 0.3, 0.2, 0.2]);
        let via_args = d.entropy(&["b"]).unwrap();
        let via_marginal = d.marginalize(&["b"]).unwrap().entropy(&["b"]).unwrap();
        assert_close(via_args, via_marginal, 1e-12);
    }
}
