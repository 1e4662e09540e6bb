use smallvec::SmallVec;

/// A sorted set of point indices stored as disjoint, non-adjacent half-open runs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Members {
    runs: SmallVec<[(u32, u32); 2]>,
    len: u32,
}

/// Incremental builder for [`Members`]; indices must arrive in increasing order.
pub struct MembersBuilder {
    runs: SmallVec<[(u32, u32); 2]>,
}

impl MembersBuilder {
    pub fn push(&mut self, i: usize) {
        self.push_range(i, i + 1);
    }

    pub fn push_range(&mut self, s: usize, e: usize) {
        if s >= e {
            return;
        }
        let (s, e) = (s as u32, e as u32);
        if let Some(last) = self.runs.last_mut() {
            debug_assert!(s >= last.1, "members must be pushed in increasing order");
            if s == last.1 {
                last.1 = e;
                return;
            }
        }
        self.runs.push((s, e));
    }

    pub fn finish(self) -> Members {
        let len = self.runs.iter().map(|(s, e)| e - s).sum();
        Members { runs: self.runs, len }
    }
}

impl Members {
    pub fn builder() -> MembersBuilder {
        MembersBuilder { runs: SmallVec::new() }
    }

    pub fn from_range(s: usize, e: usize) -> Self {
        let mut b = Self::builder();
        b.push_range(s, e);
        b.finish()
    }

    /// Builds from arbitrary indices (sorted and deduplicated here).
    pub fn from_indices(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        let mut b = Self::builder();
        for i in idx {
            b.push(i);
        }
        b.finish()
    }

    pub fn runs(&self) -> &[(u32, u32)] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        let i = i as u32;
        match self.runs.binary_search_by(|&(s, _)| s.cmp(&i)) {
            Ok(_) => true,
            Err(0) => false,
            Err(k) => i < self.runs[k - 1].1,
        }
    }

    /// Position of `i` in increasing order, if it is a member.
    pub fn rank(&self, i: usize) -> Option<usize> {
        let i = i as u32;
        let mut before = 0;
        for &(s, e) in self.runs.iter() {
            if i < s {
                return None;
            }
            if i < e {
                return Some((before + i - s) as usize);
            }
            before += e - s;
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.runs.iter().flat_map(|&(s, e)| (s as usize)..(e as usize))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn is_subset_of(&self, other: &Members) -> bool {
        self.runs.iter().all(|&(s, e)| {
            other.runs.iter().any(|&(os, oe)| os <= s && e <= oe)
        })
    }
}

/// An open ball B(center, radius) with its materialized members and measure.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Members,
    pub measure: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_merge_and_query() {
        let m = Members::from_indices(vec![5, 1, 2, 3, 9, 2]);
        assert_eq!(m.runs(), &[(1, 4), (5, 6), (9, 10)]);
        assert_eq!(m.len(), 5);
        assert!(m.contains(2) && m.contains(9) && !m.contains(4) && !m.contains(0));
        assert!(Members::from_range(2, 4).is_subset_of(&m));
        assert!(!Members::from_range(3, 5).is_subset_of(&m));
        assert_eq!(m.rank(5), Some(3));
        assert_eq!(m.rank(9), Some(4));
        assert_eq!(m.rank(4), None);
    }
}
