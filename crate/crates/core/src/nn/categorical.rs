//! Categorical distribution over logits, computed with log-sum-exp.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    log_probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
        Self { log_probs: logits.iter().map(|&l| l - lse).collect() }
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    /// Entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .log_probs
            .iter()
            .map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { l.exp() * l })
            .sum::<f64>()
    }

    /// Inverse-CDF sampling from one uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut cdf = 0.0;
        for (i, l) in self.log_probs.iter().enumerate() {
            cdf += l.exp();
            if u < cdf {
                return i;
            }
        }
        // u landed in the rounding gap above the last cdf value
        self.log_probs
            .iter()
            .rposition(|l| *l > f64::NEG_INFINITY)
            .unwrap_or(self.log_probs.len() - 1)
    }

    pub fn mode(&self) -> usize {
        self.log_probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &l)| if l > best.1 { (i, l) } else { best })
            .0
    }

    /// d log p(action) / d logits.
    pub fn grad_log_prob(&self, action: usize) -> Vec<f64> {
        self.log_probs
            .iter()
            .enumerate()
            .map(|(i, l)| f64::from(u8::from(i == action)) - l.exp())
            .collect()
    }

    /// d H / d logits.
    pub fn grad_entropy(&self) -> Vec<f64> {
        let h = self.entropy();
        self.log_probs
            .iter()
            .map(|&l| {
                let p = l.exp();
                if p == 0.0 {
                    0.0
                } else {
                    -p * (l + h)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits() {
        let d = Categorical::from_logits(&[0.0; 4]);
        assert!((d.log_prob(2) + 4f64.ln()).abs() < 1e-15);
        assert!((d.entropy() - 4f64.ln()).abs() < 1e-15);
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn peaked_logits_have_no_entropy() {
        let d = Categorical::from_logits(&[1000.0, 0.0, 0.0, 0.0]);
        assert!(d.entropy().abs() < 1e-12);
        assert!(d.log_prob(0).abs() < 1e-12);
        assert!(d.log_prob(1).is_finite());
        let d = Categorical::from_logits(&[-1000.0, 1000.0, 3.0, -7.0]);
        assert!((d.log_prob(0) + 2000.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_matches_probabilities() {
        let d = Categorical::from_logits(&[0.3, -1.2, 2.0, 0.0]);
        let p = d.probs();
        let n = 100_000;
        let mut counts = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..n {
            counts[d.sample(&mut rng)] += 1;
        }
        for i in 0..4 {
            let sigma = (n as f64 * p[i] * (1.0 - p[i])).sqrt();
            let diff = (counts[i] as f64 - n as f64 * p[i]).abs();
            assert!(diff <= 3.0 * sigma, "action {i}: {} vs {}", counts[i], n as f64 * p[i]);
        }
    }

    fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let logits = [0.4, -0.7, 1.3, 0.05];
        let d = Categorical::from_logits(&logits);
        let fd = finite_diff(|l| Categorical::from_logits(l).log_prob(2), &logits);
        for (a, b) in d.grad_log_prob(2).iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
        let fd = finite_diff(|l| Categorical::from_logits(l).entropy(), &logits);
        for (a, b) in d.grad_entropy().iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn mode_is_argmax() {
        assert_eq!(Categorical::from_logits(&[0.1, 3.0, -1.0, 2.9]).mode(), 1);
    }
}
