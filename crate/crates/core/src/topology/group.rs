use std::collections::{HashMap, HashSet, VecDeque};

use super::{GroupId, LinkId, PathDescriptor};

/// True iff the two paths have no link in common.
pub fn paths_disjoint(a: &PathDescriptor, b: &PathDescriptor) -> bool {
    let links: HashSet<LinkId> = a.links.iter().copied().collect();
    !b.links.iter().any(|l| links.contains(l))
}

/// Labels paths with the connected components of the shares-a-link
/// relation. Labels are 1, 2, ... in order of first appearance.
pub fn assign_group_ids(paths: &[PathDescriptor]) -> Vec<PathDescriptor> {
    let mut by_link: HashMap<LinkId, Vec<usize>> = HashMap::new();
    for (i, p) in paths.iter().enumerate() {
        for &l in &p.links {
            let users = by_link.entry(l).or_default();
            if users.last() != Some(&i) {
                users.push(i);
            }
        }
    }

    let mut label: Vec<Option<GroupId>> = vec![None; paths.len()];
    let mut next = 1;
    for start in 0..paths.len() {
        if label[start].is_some() {
            continue;
        }
        let gid = GroupId(next);
        next += 1;
        label[start] = Some(gid);
        let mut frontier = VecDeque::from([start]);
        while let Some(i) = frontier.pop_front() {
            for l in &paths[i].links {
                for &j in &by_link[l] {
                    if label[j].is_none() {
                        label[j] = Some(gid);
                        frontier.push_back(j);
                    }
                }
            }
        }
    }

    paths
        .iter()
        .zip(label)
        .map(|(p, gid)| PathDescriptor {
            links: p.links.clone(),
            group_id: gid,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(ids: &[u32]) -> PathDescriptor {
        PathDescriptor::new(ids.iter().map(|&i| LinkId(i)).collect())
    }

    fn gids(paths: &[PathDescriptor]) -> Vec<u32> {
        assign_group_ids(paths)
            .iter()
            .map(|p| p.group_id.unwrap().0)
            .collect()
    }

    #[test]
    fn disjoint_paths_get_distinct_groups() {
        assert_eq!(gids(&[path(&[0, 1]), path(&[2, 3]), path(&[4, 5])]), vec![1, 2, 3]);
    }

    #[test]
    fn one_shared_link() {
        assert_eq!(gids(&[path(&[0, 1]), path(&[2, 1]), path(&[4, 5])]), vec![1, 1, 2]);
    }

    #[test]
    fn sharing_is_transitive() {
        let a = path(&[0, 1]);
        let b = path(&[2, 1, 3]);
        let c = path(&[4, 3]);
        assert!(paths_disjoint(&a, &c));
        assert_eq!(gids(&[a, b, c]), vec![1, 1, 1]);
    }

    #[test]
    fn labels_follow_first_appearance() {
        assert_eq!(
            gids(&[path(&[9]), path(&[1]), path(&[9, 2]), path(&[3]), path(&[1])]),
            vec![1, 2, 1, 3, 2]
        );
        assert_eq!(gids(&[path(&[7])]), vec![1]);
        assert!(gids(&[]).is_empty());
    }

    #[test]
    fn disjointness() {
        let a = path(&[0, 1]);
        assert!(!paths_disjoint(&a, &a));
        assert!(paths_disjoint(&a, &path(&[2])));
        assert!(paths_disjoint(&a, &path(&[])));
    }
}
