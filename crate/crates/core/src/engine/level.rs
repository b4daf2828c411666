use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::hash::Fnv64;
use super::los::walk_supercover;
use super::state::MonsterKind;
use super::{Direction, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TileKind {
    Wall,
    Floor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    Treasure,
    Potion,
    Trap,
    Portal(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("line {line} has width {found}, expected {expected}")]
    NonRectangular { line: usize, expected: usize, found: usize },
    #[error("unknown glyph {glyph:?} at ({x}, {y})")]
    UnknownGlyph { glyph: char, x: usize, y: usize },
    #[error("portal {0} does not appear exactly twice")]
    UnpairedPortal(u8),
    #[error("map has no hero start '@'")]
    MissingHero,
    #[error("map has no exit 'S'")]
    MissingExit,
    #[error("map has more than one {0:?}")]
    Duplicate(char),
}

/// An immutable dungeon layout with all-pairs walking distances and line of
/// sight precomputed. Walls never change, so both tables are exact for every
/// state played on this level.
#[derive(Clone)]
pub struct Level {
    name: String,
    width: usize,
    height: usize,
    tiles: Vec<TileKind>,
    hero_start: Pos,
    exit: Pos,
    items: Vec<(ItemKind, Pos)>,
    monsters: Vec<(MonsterKind, Pos)>,
    trap: Vec<bool>,
    portal_twin: Vec<Option<Pos>>,
    dist: Vec<u16>,
    /// Hero travel distances, taking portals.
    travel: Vec<u16>,
    sight: Vec<bool>,
    fingerprint: u64,
    rows: Vec<String>,
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Level")
            .field("name", &self.name)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("fingerprint", &format_args!("{:016x}", self.fingerprint))
            .finish()
    }
}

/// Parses the ASCII map format: `#` wall, `.` floor, `@` hero start, `S` exit,
/// `$` treasure, `+` potion, `^` trap, `0`-`9` portal pairs, and `g w b o m`
/// for goblin, goblin wizard, blob, ogre and minitaur.
pub fn load_map(name: &str, text: &str) -> Result<Level, MapError> {
    let mut rows: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    while rows.last().is_some_and(|l| l.is_empty()) {
        rows.pop();
    }
    if rows.is_empty() {
        return Err(MapError::Empty);
    }
    let width = rows[0].chars().count();
    if width == 0 {
        return Err(MapError::Empty);
    }
    let height = rows.len();
    let mut tiles = Vec::with_capacity(width * height);
    let mut hero = None;
    let mut exit = None;
    let mut items = Vec::new();
    let mut monsters = Vec::new();
    let mut portals: BTreeMap<u8, Vec<Pos>> = BTreeMap::new();
    for (y, row) in rows.iter().enumerate() {
        let found = row.chars().count();
        if found != width {
            return Err(MapError::NonRectangular { line: y + 1, expected: width, found });
        }
        for (x, glyph) in row.chars().enumerate() {
            let p = Pos::new(x as i32, y as i32);
            let tile = match glyph {
                '#' => TileKind::Wall,
                '.' => TileKind::Floor,
                '@' => {
                    if hero.replace(p).is_some() {
                        return Err(MapError::Duplicate('@'));
                    }
                    TileKind::Floor
                }
                'S' => {
                    if exit.replace(p).is_some() {
                        return Err(MapError::Duplicate('S'));
                    }
                    TileKind::Floor
                }
                '$' => {
                    items.push((ItemKind::Treasure, p));
                    TileKind::Floor
                }
                '+' => {
                    items.push((ItemKind::Potion, p));
                    TileKind::Floor
                }
                '^' => {
                    items.push((ItemKind::Trap, p));
                    TileKind::Floor
                }
                '0'..='9' => {
                    let id = glyph as u8 - b'0';
                    portals.entry(id).or_default().push(p);
                    items.push((ItemKind::Portal(id), p));
                    TileKind::Floor
                }
                'g' | 'w' | 'b' | 'o' | 'm' => {
                    let kind = match glyph {
                        'g' => MonsterKind::Goblin,
                        'w' => MonsterKind::GoblinWizard,
                        'b' => MonsterKind::Blob,
                        'o' => MonsterKind::Ogre,
                        _ => MonsterKind::Minitaur,
                    };
                    monsters.push((kind, p));
                    TileKind::Floor
                }
                _ => return Err(MapError::UnknownGlyph { glyph, x, y }),
            };
            tiles.push(tile);
        }
    }
    let hero_start = hero.ok_or(MapError::MissingHero)?;
    let exit = exit.ok_or(MapError::MissingExit)?;
    let mut portal_twin = vec![None; width * height];
    for (id, ends) in &portals {
        if ends.len() != 2 {
            return Err(MapError::UnpairedPortal(*id));
        }
        portal_twin[ends[0].y as usize * width + ends[0].x as usize] = Some(ends[1]);
        portal_twin[ends[1].y as usize * width + ends[1].x as usize] = Some(ends[0]);
    }
    let mut trap = vec![false; width * height];
    for (kind, p) in &items {
        if *kind == ItemKind::Trap {
            trap[p.y as usize * width + p.x as usize] = true;
        }
    }

    let mut fp = Fnv64::new();
    fp.write(name.as_bytes());
    fp.write_u8(0);
    for row in &rows {
        fp.write(row.as_bytes());
        fp.write_u8(b'\n');
    }

    let mut level = Level {
        name: name.to_string(),
        width,
        height,
        tiles,
        hero_start,
        exit,
        items,
        monsters,
        trap,
        portal_twin,
        dist: Vec::new(),
        travel: Vec::new(),
        sight: Vec::new(),
        fingerprint: fp.finish(),
        rows: rows.iter().map(|r| r.to_string()).collect(),
    };
    level.dist = level.all_pairs_distances(false);
    level.travel = level.all_pairs_distances(true);
    level.sight = level.all_pairs_sight();
    Ok(level)
}

impl Level {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn hero_start(&self) -> Pos {
        self.hero_start
    }

    pub fn exit(&self) -> Pos {
        self.exit
    }

    /// Items as placed in the map file, in row-major order.
    pub fn items(&self) -> &[(ItemKind, Pos)] {
        &self.items
    }

    /// Monsters as placed in the map file, in row-major order.
    pub fn monsters(&self) -> &[(MonsterKind, Pos)] {
        &self.monsters
    }

    /// Stable digest of the name and layout.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// The source map rows, suitable for [`load_map`].
    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn to_map_text(&self) -> String {
        let mut s = self.rows.join("\n");
        s.push('\n');
        s
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    pub(crate) fn index(&self, p: Pos) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    /// Out-of-bounds coordinates read as walls.
    pub fn tile(&self, p: Pos) -> TileKind {
        if self.in_bounds(p) {
            self.tiles[self.index(p)]
        } else {
            TileKind::Wall
        }
    }

    pub fn is_floor(&self, p: Pos) -> bool {
        self.tile(p) == TileKind::Floor
    }

    pub fn is_trap(&self, p: Pos) -> bool {
        self.in_bounds(p) && self.trap[self.index(p)]
    }

    pub fn portal_twin(&self, p: Pos) -> Option<Pos> {
        if self.in_bounds(p) {
            self.portal_twin[self.index(p)]
        } else {
            None
        }
    }

    /// Value used for an unreachable target: grid area + 1.
    pub fn unreachable_distance(&self) -> u32 {
        self.area() as u32 + 1
    }

    /// Shortest walking distance over non-wall tiles, or `None` when no path
    /// exists (or either end is a wall).
    pub fn distance(&self, a: Pos, b: Pos) -> Option<u32> {
        if !self.is_floor(a) || !self.is_floor(b) {
            return None;
        }
        let d = self.dist[self.index(a) * self.area() + self.index(b)];
        (d != u16::MAX).then_some(u32::from(d))
    }

    /// Like [`Level::distance`] but maps unreachable targets to
    /// [`Level::unreachable_distance`].
    pub fn distance_or_sentinel(&self, a: Pos, b: Pos) -> u32 {
        self.distance(a, b).unwrap_or_else(|| self.unreachable_distance())
    }

    /// Fewest hero moves from `a` to `b` when stepping onto a portal
    /// teleports to its twin. Asymmetric in general.
    pub fn travel_distance(&self, a: Pos, b: Pos) -> Option<u32> {
        if !self.is_floor(a) || !self.is_floor(b) {
            return None;
        }
        let d = self.travel[self.index(a) * self.area() + self.index(b)];
        (d != u16::MAX).then_some(u32::from(d))
    }

    pub fn travel_distance_or_sentinel(&self, a: Pos, b: Pos) -> u32 {
        self.travel_distance(a, b).unwrap_or_else(|| self.unreachable_distance())
    }

    /// Whether the supercover line between the two tiles crosses no wall.
    /// Both coordinates must be in bounds.
    pub fn has_line_of_sight(&self, a: Pos, b: Pos) -> bool {
        self.sight[self.index(a) * self.area() + self.index(b)]
    }

    fn all_pairs_distances(&self, teleport: bool) -> Vec<u16> {
        let n = self.area();
        let mut dist = vec![u16::MAX; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            if self.tiles[src] == TileKind::Wall {
                continue;
            }
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            queue.clear();
            queue.push_back(src);
            while let Some(cur) = queue.pop_front() {
                let p = Pos::new((cur % self.width) as i32, (cur / self.width) as i32);
                for dir in Direction::ALL {
                    let q = p.step(dir);
                    if !self.is_floor(q) {
                        continue;
                    }
                    let qi = self.index(q);
                    let step = row[cur] + 1;
                    match self.portal_twin[qi].filter(|_| teleport) {
                        // Stepping onto a portal lands on its twin. The
                        // portal tile itself counts as reached but is not
                        // walked on from.
                        Some(twin) => {
                            row[qi] = row[qi].min(step);
                            let ti = self.index(twin);
                            if row[ti] == u16::MAX {
                                row[ti] = step;
                                queue.push_back(ti);
                            }
                        }
                        None => {
                            if row[qi] == u16::MAX {
                                row[qi] = step;
                                queue.push_back(qi);
                            }
                        }
                    }
                }
            }
        }
        dist
    }

    fn all_pairs_sight(&self) -> Vec<bool> {
        let n = self.area();
        let mut sight = vec![false; n * n];
        for a in 0..n {
            let pa = Pos::new((a % self.width) as i32, (a / self.width) as i32);
            sight[a * n + a] = self.tiles[a] == TileKind::Floor;
            for b in a + 1..n {
                let pb = Pos::new((b % self.width) as i32, (b / self.width) as i32);
                let clear = walk_supercover(pa, pb, |p| self.tile(p) == TileKind::Floor);
                sight[a * n + b] = clear;
                sight[b * n + a] = clear;
            }
        }
        sight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_exit_is_rejected() {
        assert_eq!(load_map("t", "###\n#@#\n###").unwrap_err(), MapError::MissingExit);
    }

    #[test]
    fn minimal_one_row_map() {
        let level = load_map("t", "@.S").unwrap();
        assert_eq!(level.hero_start(), Pos::new(0, 0));
        assert_eq!(level.exit(), Pos::new(2, 0));
        assert!(level.items().is_empty());
        assert!(level.monsters().is_empty());
        assert_eq!(level.distance(Pos::new(0, 0), Pos::new(2, 0)), Some(2));
    }

    #[test]
    fn digits_pair_portals() {
        let level = load_map("t", "@1.\n.1S").unwrap();
        assert_eq!(level.portal_twin(Pos::new(1, 0)), Some(Pos::new(1, 1)));
        assert_eq!(level.portal_twin(Pos::new(1, 1)), Some(Pos::new(1, 0)));
        let portals: Vec<_> = level.items().iter().filter(|(k, _)| *k == ItemKind::Portal(1)).collect();
        assert_eq!(portals.len(), 2);
    }

    #[test]
    fn format_errors() {
        assert_eq!(load_map("t", "@1S").unwrap_err(), MapError::UnpairedPortal(1));
        assert_eq!(load_map("t", "@11S1").unwrap_err(), MapError::UnpairedPortal(1));
        assert_eq!(load_map("t", ".S").unwrap_err(), MapError::MissingHero);
        assert_eq!(
            load_map("t", "@.S\n..").unwrap_err(),
            MapError::NonRectangular { line: 2, expected: 3, found: 2 }
        );
        assert_eq!(
            load_map("t", "@xS").unwrap_err(),
            MapError::UnknownGlyph { glyph: 'x', x: 1, y: 0 }
        );
        assert_eq!(load_map("t", "@@S").unwrap_err(), MapError::Duplicate('@'));
        assert_eq!(load_map("t", "").unwrap_err(), MapError::Empty);
    }

    #[test]
    fn trailing_newlines_and_crlf_are_accepted() {
        let level = load_map("t", "@.S\r\n...\r\n\n").unwrap();
        assert_eq!(level.height(), 2);
        assert_eq!(level.rows(), &["@.S".to_string(), "...".to_string()]);
    }

    #[test]
    fn travel_distance_takes_portals() {
        let level = load_map("t", "@.1#1.S").unwrap();
        assert_eq!(level.distance(Pos::new(0, 0), Pos::new(6, 0)), None);
        assert_eq!(level.travel_distance(Pos::new(0, 0), Pos::new(6, 0)), Some(4));
        assert_eq!(level.travel_distance(Pos::new(0, 0), Pos::new(2, 0)), Some(2));
        assert_eq!(level.travel_distance(Pos::new(6, 0), Pos::new(0, 0)), Some(4));
    }

    #[test]
    fn unreachable_distance_is_none() {
        let level = load_map("t", "@#S").unwrap();
        assert_eq!(level.distance(Pos::new(0, 0), Pos::new(2, 0)), None);
        assert_eq!(level.distance_or_sentinel(Pos::new(0, 0), Pos::new(2, 0)), 4);
    }

    #[test]
    fn sight_is_blocked_by_walls_only() {
        let level = load_map("t", "@.#.S\n.g...").unwrap();
        assert!(level.has_line_of_sight(Pos::new(0, 0), Pos::new(1, 0)));
        assert!(!level.has_line_of_sight(Pos::new(0, 0), Pos::new(4, 0)));
        // The goblin does not block.
        assert!(level.has_line_of_sight(Pos::new(0, 1), Pos::new(4, 1)));
    }
}
