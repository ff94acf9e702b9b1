//! Artifact provenance block.
//!
//! Every file the tool writes embeds the tool version, a hash of the
//! effective configuration and the seed, so any artifact can be traced back
//! to (and reproduced by) the exact invocation that made it.

use serde::Serialize;

pub const TOOL: &str = "pigm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    /// `fnv1a64:<hex>` over the canonical JSON of the effective arguments.
    pub config: String,
    pub seed: u64,
}

impl Meta {
    /// Hashes `config` through its JSON form; serde struct serialization is
    /// field-ordered, so the hash is stable for identical argument values.
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Self {
        let canon = serde_json::to_string(config).expect("config serializes");
        Meta {
            tool: TOOL,
            version: VERSION,
            config: format!("fnv1a64:{:016x}", pigm_core::fnv1a64(canon.as_bytes())),
            seed,
        }
    }

    /// `# key: value` comment lines for CSV artifacts.
    pub fn csv_lines(&self) -> String {
        format!(
            "# tool: {} {}\n# config: {}\n# seed: {}\n",
            self.tool, self.version, self.config, self.seed
        )
    }

    /// Key/value pairs for the ensemble writer's embedded metadata.
    pub fn kv(&self) -> Vec<(String, String)> {
        vec![
            ("tool".into(), format!("{} {}", self.tool, self.version)),
            ("config".into(), self.config.clone()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Cfg {
        input: String,
        n: u32,
    }

    #[test]
    fn hash_depends_on_config_values() {
        let a = Meta::new(&Cfg { input: "x.csv".into(), n: 3 }, 7);
        let b = Meta::new(&Cfg { input: "x.csv".into(), n: 3 }, 7);
        let c = Meta::new(&Cfg { input: "x.csv".into(), n: 4 }, 7);
        assert_eq!(a.config, b.config);
        assert_ne!(a.config, c.config);
        assert!(a.config.starts_with("fnv1a64:"));
        assert_eq!(a.config.len(), "fnv1a64:".len() + 16);
    }

    #[test]
    fn csv_lines_are_comments() {
        let m = Meta::new(&Cfg { input: "x".into(), n: 1 }, 42);
        for line in m.csv_lines().lines() {
            assert!(line.starts_with("# "));
        }
        assert!(m.csv_lines().contains("# seed: 42"));
    }
}
