use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ids::{FixtureId, RoomId};

use super::WorldError;

/// Static house map: rooms, doors and fixtures. Known to every agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    rooms: Vec<RoomId>,
    adjacency: BTreeMap<RoomId, BTreeSet<RoomId>>,
    containers: BTreeMap<FixtureId, RoomId>,
    surfaces: BTreeMap<FixtureId, RoomId>,
    // dist[i][j] over the sorted room list
    dist: Vec<Vec<u32>>,
}

impl Layout {
    pub fn new(
        rooms: impl IntoIterator<Item = RoomId>,
        edges: impl IntoIterator<Item = (RoomId, RoomId)>,
        containers: impl IntoIterator<Item = (FixtureId, RoomId)>,
        surfaces: impl IntoIterator<Item = (FixtureId, RoomId)>,
    ) -> Result<Self, WorldError> {
        let rooms: BTreeSet<RoomId> = rooms.into_iter().collect();
        if rooms.is_empty() {
            return Err(WorldError::Config("layout has no rooms".into()));
        }
        let mut adjacency: BTreeMap<RoomId, BTreeSet<RoomId>> =
            rooms.iter().map(|r| (r.clone(), BTreeSet::new())).collect();
        for (a, b) in edges {
            if !rooms.contains(&a) || !rooms.contains(&b) {
                return Err(WorldError::Config(format!("edge {a}-{b} names unknown room")));
            }
            if a == b {
                return Err(WorldError::Config(format!("self-loop on {a}")));
            }
            adjacency.get_mut(&a).unwrap().insert(b.clone());
            adjacency.get_mut(&b).unwrap().insert(a);
        }
        let containers: BTreeMap<FixtureId, RoomId> = containers.into_iter().collect();
        let surfaces: BTreeMap<FixtureId, RoomId> = surfaces.into_iter().collect();
        for (f, r) in containers.iter().chain(surfaces.iter()) {
            if !rooms.contains(r) {
                return Err(WorldError::Config(format!("fixture {f} in unknown room {r}")));
            }
        }
        if let Some(f) = containers.keys().find(|f| surfaces.contains_key(*f)) {
            return Err(WorldError::Config(format!("{f} is both container and surface")));
        }

        let rooms: Vec<RoomId> = rooms.into_iter().collect();
        let mut layout = Self {
            rooms,
            adjacency,
            containers,
            surfaces,
            dist: Vec::new(),
        };
        layout.dist = (0..layout.rooms.len()).map(|i| layout.bfs(i)).collect();
        if layout.dist.iter().flatten().any(|&d| d == u32::MAX) {
            return Err(WorldError::Config("room graph is not connected".into()));
        }
        Ok(layout)
    }

    fn bfs(&self, start: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.rooms.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for n in &self.adjacency[&self.rooms[i]] {
                let j = self.index(n).unwrap();
                if dist[j] == u32::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    fn index(&self, room: &RoomId) -> Option<usize> {
        self.rooms.binary_search(room).ok()
    }

    pub fn rooms(&self) -> &[RoomId] {
        &self.rooms
    }

    pub fn has_room(&self, room: &RoomId) -> bool {
        self.index(room).is_some()
    }

    pub fn neighbors(&self, room: &RoomId) -> impl Iterator<Item = &RoomId> {
        self.adjacency.get(room).into_iter().flatten()
    }

    pub fn is_adjacent(&self, a: &RoomId, b: &RoomId) -> bool {
        self.adjacency.get(a).is_some_and(|n| n.contains(b))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&RoomId, &RoomId)> {
        self.adjacency
            .iter()
            .flat_map(|(a, ns)| ns.iter().filter(move |b| a < *b).map(move |b| (a, b)))
    }

    pub fn containers(&self) -> &BTreeMap<FixtureId, RoomId> {
        &self.containers
    }

    pub fn surfaces(&self) -> &BTreeMap<FixtureId, RoomId> {
        &self.surfaces
    }

    pub fn is_container(&self, f: &FixtureId) -> bool {
        self.containers.contains_key(f)
    }

    pub fn is_surface(&self, f: &FixtureId) -> bool {
        self.surfaces.contains_key(f)
    }

    pub fn fixture_room(&self, f: &FixtureId) -> Option<&RoomId> {
        self.containers.get(f).or_else(|| self.surfaces.get(f))
    }

    pub fn containers_in<'a>(&'a self, room: &'a RoomId) -> impl Iterator<Item = &'a FixtureId> {
        self.containers.iter().filter(move |(_, r)| *r == room).map(|(f, _)| f)
    }

    pub fn surfaces_in<'a>(&'a self, room: &'a RoomId) -> impl Iterator<Item = &'a FixtureId> {
        self.surfaces.iter().filter(move |(_, r)| *r == room).map(|(f, _)| f)
    }

    /// Shortest-path length in doors. `None` if either room is unknown.
    pub fn distance(&self, a: &RoomId, b: &RoomId) -> Option<u32> {
        Some(self.dist[self.index(a)?][self.index(b)?])
    }

    /// First room to step into on a shortest path from `from` to `to`;
    /// among equally short routes the lexicographically smallest neighbor wins.
    pub fn next_hop(&self, from: &RoomId, to: &RoomId) -> Option<&RoomId> {
        let d = self.distance(from, to)?;
        if d == 0 {
            return None;
        }
        self.neighbors(from)
            .find(|n| self.distance(n, to) == Some(d - 1))
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().flatten().copied().max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Layout {
        // a - b - c - d, plus a - e - d
        Layout::new(
            ["a", "b", "c", "d", "e"].map(RoomId::from),
            [("a", "b"), ("b", "c"), ("c", "d"), ("a", "e"), ("e", "d")]
                .map(|(x, y)| (RoomId::from(x), RoomId::from(y))),
            [],
            [],
        )
        .unwrap()
    }

    #[test]
    fn distances_and_hops() {
        let l = line();
        assert_eq!(l.distance(&"a".into(), &"d".into()), Some(2));
        assert_eq!(l.next_hop(&"a".into(), &"d".into()), Some(&RoomId::from("e")));
        assert_eq!(l.next_hop(&"a".into(), &"c".into()), Some(&RoomId::from("b")));
        assert_eq!(l.next_hop(&"a".into(), &"a".into()), None);
        assert_eq!(l.diameter(), 2);
    }

    #[test]
    fn rejects_disconnected() {
        let err = Layout::new(["a", "b"].map(RoomId::from), [], [], []).unwrap_err();
        assert!(matches!(err, WorldError::Config(_)));
    }

    #[test]
    fn lexicographic_tie_break() {
        // a connects to both b and c, both connect to d
        let l = Layout::new(
            ["a", "b", "c", "d"].map(RoomId::from),
            [("a", "c"), ("a", "b"), ("c", "d"), ("b", "d")]
                .map(|(x, y)| (RoomId::from(x), RoomId::from(y))),
            [],
            [],
        )
        .unwrap();
        assert_eq!(l.next_hop(&"a".into(), &"d".into()), Some(&RoomId::from("b")));
    }
}
