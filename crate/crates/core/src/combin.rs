//! Small combinatorial helpers shared by the samplers and oracles.

use statrs::function::gamma::ln_gamma;

/// Exact binomial coefficient, `None` on `u64` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// `ln C(n, k)`; exact summation for small arguments, log-gamma otherwise.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    let k = k.min(n - k);
    if k < 64 {
        (0..k)
            .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
            .sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// Neumaier-compensated sum, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_k_subset(n: usize, k: usize, mut f: impl FnMut(&[u32])) {
    if k > n {
        return;
    }
    let mut idx: Vec<u32> = (0..k as u32).collect();
    loop {
        f(&idx);
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if (idx[i] as usize) < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Unranks `rank` into the `k`-subset of the combinatorial number system (colex order).
pub fn unrank_colex(mut rank: u64, k: usize, out: &mut Vec<u32>) {
    out.clear();
    out.resize(k, 0);
    for i in (1..=k).rev() {
        // largest c with C(c, i) <= rank
        let mut c = i as u64 - 1;
        while binomial(c + 1, i as u64).is_some_and(|b| b <= rank) {
            c += 1;
        }
        rank -= binomial(c, i as u64).unwrap_or(0);
        out[i - 1] = c as u32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(10, 3), Some(120));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(200, 100), None);
    }

    #[test]
    fn ln_binomial_matches_exact() {
        for (n, k) in [(10u64, 3u64), (500, 2), (1000, 400), (60, 30)] {
            let exact = binomial(n, k).map(|b| (b as f64).ln());
            let got = ln_binomial(n, k);
            if let Some(e) = exact {
                assert!((got - e).abs() < 1e-10 * e.max(1.0), "{n} {k}");
            }
            assert!(got.is_finite());
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
        assert_eq!(compensated_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn enumerates_all_subsets() {
        let mut seen = Vec::new();
        for_each_k_subset(5, 3, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
        let mut one = 0;
        for_each_k_subset(3, 0, |_| one += 1);
        assert_eq!(one, 1);
    }

    #[test]
    fn colex_unranking_is_a_bijection() {
        let mut all = std::collections::BTreeSet::new();
        let mut buf = Vec::new();
        for r in 0..binomial(7, 3).unwrap() {
            unrank_colex(r, 3, &mut buf);
            assert!(buf.windows(2).all(|w| w[0] < w[1]));
            assert!(buf.iter().all(|&v| v < 7));
            all.insert(buf.clone());
        }
        assert_eq!(all.len(), 35);
    }
}
