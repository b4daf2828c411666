//! Shipped levels. Five reference maps for training and one structurally
//! different map held out for generalization checks.

use std::path::Path;
use std::sync::Arc;

use persona_core::engine::{load_map, Level};

use crate::PipelineError;

pub const REFERENCE_MAPS: [(&str, &str); 5] = [
    ("three_halls", include_str!("../maps/three_halls.txt")),
    ("catacombs", include_str!("../maps/catacombs.txt")),
    ("portal_run", include_str!("../maps/portal_run.txt")),
    ("trap_gauntlet", include_str!("../maps/trap_gauntlet.txt")),
    ("open_arena", include_str!("../maps/open_arena.txt")),
];

/// A winding single corridor: every persona ends up walking the same route.
pub const HELD_OUT_MAP: (&str, &str) = ("serpentine", include_str!("../maps/serpentine.txt"));

fn parse(name: &str, text: &str) -> Arc<Level> {
    Arc::new(load_map(name, text.trim_end()).unwrap_or_else(|e| panic!("shipped map {name} is invalid: {e}")))
}

pub fn reference_levels() -> Vec<Arc<Level>> {
    REFERENCE_MAPS.iter().map(|(n, t)| parse(n, t)).collect()
}

pub fn held_out_level() -> Arc<Level> {
    parse(HELD_OUT_MAP.0, HELD_OUT_MAP.1)
}

pub fn reference_map_names() -> Vec<String> {
    REFERENCE_MAPS.iter().map(|(n, _)| n.to_string()).collect()
}

/// Names of every shipped map, reference maps first.
pub fn map_names() -> Vec<&'static str> {
    REFERENCE_MAPS.iter().map(|(n, _)| *n).chain([HELD_OUT_MAP.0]).collect()
}

pub fn builtin_map(name: &str) -> Option<Arc<Level>> {
    REFERENCE_MAPS.iter().chain([&HELD_OUT_MAP]).find(|(n, _)| *n == name).map(|(n, t)| parse(n, t))
}

/// A shipped map by name, or a map file by path. File maps are named after
/// the file stem.
pub fn resolve_map(entry: &str) -> Result<Arc<Level>, PipelineError> {
    if let Some(level) = builtin_map(entry) {
        return Ok(level);
    }
    let path = Path::new(entry);
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("map {entry:?} is neither a shipped map nor a readable file: {e}")))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(entry);
    load_map(name, text.trim_end()).map(Arc::new).map_err(|e| PipelineError::Config(format!("map {entry}: {e}")))
}

#[cfg(test)]
mod tests {
    use persona_core::engine::{ItemKind, MonsterKind};

    use super::*;

    #[test]
    fn shipped_maps_meet_structural_constraints() {
        for level in reference_levels().into_iter().chain([held_out_level()]) {
            let monsters = level.monsters().len();
            let treasures = level.items().iter().filter(|(k, _)| *k == ItemKind::Treasure).count();
            assert!((5..=6).contains(&monsters), "{}: {monsters} monsters", level.name());
            assert!((6..=9).contains(&treasures), "{}: {treasures} treasures", level.name());
            assert_eq!((level.width(), level.height()), (10, 20), "{}", level.name());
            assert!(level.distance(level.hero_start(), level.exit()).is_some() || level.travel_distance(level.hero_start(), level.exit()).is_some());
            assert!(level.monsters().iter().all(|(k, _)| *k != MonsterKind::Minitaur));
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(map_names().len(), 6);
        assert_eq!(builtin_map("serpentine").unwrap().name(), "serpentine");
        assert!(builtin_map("nowhere").is_none());
        assert!(matches!(resolve_map("nowhere.txt"), Err(PipelineError::Config(_))));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tiny.txt");
        std::fs::write(&p, "@.S\n").unwrap();
        assert_eq!(resolve_map(p.to_str().unwrap()).unwrap().name(), "tiny");
    }
}
