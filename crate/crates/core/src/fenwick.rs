//! Binary indexed tree over 1-based positions, used for O(log n) rank
//! counting and order-statistic queries.

#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        Fenwick { tree: vec![0; len + 1] }
    }

    /// Tree with every position in `1..=len` set to one.
    pub fn ones(len: usize) -> Self {
        let mut tree = vec![1i64; len + 1];
        tree[0] = 0;
        for i in 1..=len {
            let parent = i + (i & i.wrapping_neg());
            if parent <= len {
                tree[parent] += tree[i];
            }
        }
        Fenwick { tree }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn add(&mut self, pos: usize, delta: i64) {
        debug_assert!(pos >= 1 && pos <= self.len());
        let mut i = pos;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `1..=pos`.
    pub fn prefix(&self, pos: usize) -> i64 {
        let mut i = pos.min(self.len());
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest position whose prefix sum reaches `k`, assuming non-negative
    /// entries. Returns `None` when the total is below `k`.
    pub fn find_kth(&self, k: i64) -> Option<usize> {
        if k <= 0 {
            return None;
        }
        let n = self.len();
        let mut step = if n == 0 {
            0
        } else {
            1usize << (usize::BITS - 1 - n.leading_zeros())
        };
        let mut pos = 0usize;
        let mut rem = k;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        if pos < n {
            Some(pos + 1)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kth_over_ones() {
        let mut f = Fenwick::ones(10);
        assert_eq!(f.prefix(10), 10);
        assert_eq!(f.find_kth(3), Some(3));
        f.add(2, -1);
        assert_eq!(f.find_kth(3), Some(4));
        assert_eq!(f.find_kth(10), None);
        assert_eq!(f.find_kth(9), Some(10));
    }

    #[test]
    fn ones_matches_incremental() {
        for n in 0..40 {
            let a = Fenwick::ones(n);
            let mut b = Fenwick::new(n);
            for i in 1..=n {
                b.add(i, 1);
            }
            assert_eq!(a.tree, b.tree);
        }
    }
}
