use crate::games::{Convention, BEER_QUICHE_PAYOFF};

/// Closed-form equilibrium of the quiche game. Values are reported in the
/// maximizer convention unless converted with `in_convention`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeerQuiche {
    /// Prior probability of the tough type.
    pub p: f64,
}

pub const BEER: usize = 0;
pub const QUICHE: usize = 1;
pub const BULLY: usize = 0;
pub const DEFER: usize = 1;

impl BeerQuiche {
    pub fn new(p: f64) -> Self {
        Self { p }
    }

    /// Payoff to Player 1 for type i, signal u, response v.
    pub fn payoff(i: usize, u: usize, v: usize) -> f64 {
        BEER_QUICHE_PAYOFF[i][2 * u + v]
    }

    /// Value of the subgame after signal u at posterior q (Player 2 best responds).
    pub fn subgame(u: usize, q: f64) -> f64 {
        let r = |v| q * Self::payoff(0, u, v) + (1.0 - q) * Self::payoff(1, u, v);
        r(BULLY).min(r(DEFER))
    }

    /// Root value: concave envelope of the best single-signal value.
    pub fn value(&self) -> f64 {
        let p = self.p;
        if p < 2.0 / 3.0 {
            2.5 * p - 1.0
        } else {
            p
        }
    }

    pub fn value_in(&self, c: Convention) -> f64 {
        match c {
            Convention::Maximizer => self.value(),
            Convention::Minimizer => -self.value(),
        }
    }

    /// Probability that type i drinks beer.
    pub fn p1_beer(&self, i: usize) -> f64 {
        let p = self.p;
        if p >= 2.0 / 3.0 || i == 0 {
            1.0
        } else {
            // weak type mixes so the beer posterior is exactly 2/3
            p / (2.0 * (1.0 - p))
        }
    }

    /// Posterior of the tough type after signal u.
    pub fn posterior(&self, u: usize) -> Option<f64> {
        let p = self.p;
        let l0 = if u == BEER { self.p1_beer(0) } else { 1.0 - self.p1_beer(0) };
        let l1 = if u == BEER { self.p1_beer(1) } else { 1.0 - self.p1_beer(1) };
        let z = p * l0 + (1.0 - p) * l1;
        (z > 0.0).then(|| p * l0 / z)
    }

    /// Probability that Player 2 bullies after signal u.
    pub fn p2_bully(&self, u: usize) -> f64 {
        if u == QUICHE {
            1.0
        } else if self.p < 2.0 / 3.0 {
            0.5
        } else {
            0.0
        }
    }

    /// Dual vector at the root in the maximizer convention: the payoff each
    /// type secures in equilibrium.
    pub fn dual(&self) -> [f64; 2] {
        [self.type_payoff(0), self.type_payoff(1)]
    }

    /// Expected payoff of type i when it plays signal u against the
    /// equilibrium responses.
    pub fn signal_payoff(&self, i: usize, u: usize) -> f64 {
        let y = self.p2_bully(u);
        y * Self::payoff(i, u, BULLY) + (1.0 - y) * Self::payoff(i, u, DEFER)
    }

    pub fn type_payoff(&self, i: usize) -> f64 {
        let b = self.p1_beer(i);
        b * self.signal_payoff(i, BEER) + (1.0 - b) * self.signal_payoff(i, QUICHE)
    }

    /// Largest gain any player obtains by a unilateral pure deviation.
    pub fn max_deviation_gain(&self) -> f64 {
        let mut gain: f64 = 0.0;
        for i in 0..2 {
            let eq = self.type_payoff(i);
            for u in 0..2 {
                gain = gain.max(self.signal_payoff(i, u) - eq);
            }
        }
        for u in 0..2 {
            let Some(q) = self.posterior(u) else { continue };
            let y = self.p2_bully(u);
            let r = |v| q * Self::payoff(0, u, v) + (1.0 - q) * Self::payoff(1, u, v);
            let eq = y * r(BULLY) + (1.0 - y) * r(DEFER);
            for v in 0..2 {
                // Player 2 gains by lowering Player 1's payoff
                gain = gain.max(eq - r(v));
            }
        }
        gain
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_prior() {
        let b = BeerQuiche::new(1.0 / 3.0);
        assert!((b.value() + 1.0 / 6.0).abs() < 1e-15);
        assert!((b.value_in(Convention::Minimizer) - 1.0 / 6.0).abs() < 1e-15);
        assert!((b.p1_beer(1) - 0.25).abs() < 1e-15);
        assert!((b.posterior(BEER).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.posterior(QUICHE), Some(0.0));
        assert_eq!(b.dual(), [1.5, -1.0]);
        assert!((b.p * 1.5 + (1.0 - b.p) * -1.0 - b.value()).abs() < 1e-15);
        assert!(b.max_deviation_gain() <= 1e-12);
    }

    #[test]
    fn equilibrium_across_priors() {
        for j in 1..30 {
            let b = BeerQuiche::new(j as f64 / 30.0);
            assert!(b.max_deviation_gain() <= 1e-12, "p = {}", b.p);
            let d = b.dual();
            assert!((b.p * d[0] + (1.0 - b.p) * d[1] - b.value()).abs() < 1e-12);
        }
    }

    #[test]
    fn value_is_envelope() {
        for j in 0..=60 {
            let p = j as f64 / 60.0;
            let pooled = BeerQuiche::subgame(BEER, p).max(BeerQuiche::subgame(QUICHE, p));
            assert!(BeerQuiche::new(p).value() >= pooled - 1e-12);
        }
    }
}
