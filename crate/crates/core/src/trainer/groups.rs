use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{derive_rng, Stream};

/// Random balanced partition of users into reporting groups. Group `g` is
/// the only one that reports at iteration `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    groups: Vec<Vec<usize>>,
    of_user: Vec<usize>,
}

impl GroupAssignment {
    pub fn group(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    pub fn group_of(&self, user: usize) -> usize {
        self.of_user[user]
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

pub fn partition_groups(users: usize, k: usize, seed: u64) -> Result<GroupAssignment> {
    if k == 0 || k > users {
        return Err(Error::param("k", format!("need 1 <= k <= {users} users, got {k}")));
    }
    let mut order: Vec<usize> = (0..users).collect();
    order.shuffle(&mut derive_rng(seed, Stream::Groups, 0));
    let mut groups = vec![Vec::with_capacity(users / k + 1); k];
    let mut of_user = vec![0; users];
    for (pos, &u) in order.iter().enumerate() {
        groups[pos % k].push(u);
        of_user[u] = pos % k;
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(GroupAssignment { groups, of_user })
}
