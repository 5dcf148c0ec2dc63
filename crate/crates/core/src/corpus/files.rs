use std::fs;
use std::path::Path;

use super::CorpusError;
use crate::filters::{AddressList, FilterError, RuleSet, TokenStats};
use crate::netsim::World;

pub const WHITELIST_FILE: &str = "whitelist.txt";
pub const BLACKLIST_FILE: &str = "blacklist.txt";
pub const RULES_FILE: &str = "rules.tsv";
pub const TOKENS_FILE: &str = "tokens.tsv";

/// Everything a lists directory can hold. Missing files load as empty;
/// missing token statistics load as `None` so callers can decide whether
/// to train.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ListBundle {
    pub whitelist: AddressList,
    pub blacklist: AddressList,
    pub rules: RuleSet,
    pub stats: Option<TokenStats>,
}

fn read_optional(path: &Path) -> Result<Option<String>, CorpusError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CorpusError::io(path, e)),
    }
}

fn parsed<T>(path: &Path, result: Result<T, FilterError>) -> Result<T, CorpusError> {
    result.map_err(|e| match e {
        FilterError::Parse { line, reason } => CorpusError::Parse {
            path: path.display().to_string(),
            line,
            reason,
        },
        other => CorpusError::Parse {
            path: path.display().to_string(),
            line: 0,
            reason: other.to_string(),
        },
    })
}

pub fn load_lists(dir: impl AsRef<Path>) -> Result<ListBundle, CorpusError> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(CorpusError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut bundle = ListBundle::default();
    let p = dir.join(WHITELIST_FILE);
    if let Some(t) = read_optional(&p)? {
        bundle.whitelist = parsed(&p, AddressList::parse(&t))?;
    }
    let p = dir.join(BLACKLIST_FILE);
    if let Some(t) = read_optional(&p)? {
        bundle.blacklist = parsed(&p, AddressList::parse(&t))?;
    }
    let p = dir.join(RULES_FILE);
    if let Some(t) = read_optional(&p)? {
        bundle.rules = parsed(&p, RuleSet::parse(&t))?;
    }
    let p = dir.join(TOKENS_FILE);
    if let Some(t) = read_optional(&p)? {
        bundle.stats = Some(parsed(&p, TokenStats::parse(&t))?);
    }
    Ok(bundle)
}

pub fn save_lists(bundle: &ListBundle, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| CorpusError::io(&p, e))
    };
    write(WHITELIST_FILE, bundle.whitelist.render())?;
    write(BLACKLIST_FILE, bundle.blacklist.render())?;
    write(RULES_FILE, bundle.rules.render())?;
    if let Some(stats) = &bundle.stats {
        write(TOKENS_FILE, stats.render())?;
    }
    Ok(())
}

pub fn load_world(path: impl AsRef<Path>) -> Result<World, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    World::parse(&text).map_err(|e| match e {
        crate::netsim::NetError::WorldParse { line, reason } => CorpusError::Parse {
            path: path.display().to_string(),
            line,
            reason,
        },
        other => CorpusError::Parse {
            path: path.display().to_string(),
            line: 0,
            reason: other.to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{ListKey, Rule, RuleAction, RuleField};

    #[test]
    fn bundle_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut bundle = ListBundle::default();
        bundle.whitelist.insert("friend@a.example".parse::<ListKey>().unwrap());
        bundle.blacklist.insert("10.0.0.66".parse::<ListKey>().unwrap());
        bundle.rules = RuleSet::new(vec![Rule::new(RuleField::Subject, "Cheap  Pills", RuleAction::Block).unwrap()]);
        save_lists(&bundle, dir.path()).unwrap();
        assert_eq!(load_lists(dir.path()).unwrap(), bundle);
    }

    #[test]
    fn empty_directory_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let b = load_lists(dir.path()).unwrap();
        assert!(b.whitelist.is_empty() && b.blacklist.is_empty() && b.rules.is_empty());
        assert!(b.stats.is_none());
    }

    #[test]
    fn parse_errors_carry_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(RULES_FILE), "subject\tok\tblock\nnonsense\n").unwrap();
        let err = load_lists(dir.path()).unwrap_err();
        assert_eq!(err.line(), Some(2));
        assert!(err.to_string().contains(RULES_FILE));
    }

    #[test]
    fn world_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("world.txt");
        let w = World::scenario_default();
        fs::write(&p, w.render()).unwrap();
        assert_eq!(load_world(&p).unwrap().render(), w.render());
        fs::write(&p, "server A domains=a.example\nbogus\n").unwrap();
        assert_eq!(load_world(&p).unwrap_err().line(), Some(2));
    }
}
