//! Output directory handling, number formatting, and the run manifest.
//! Nothing here depends on the wall clock: two runs with the same config
//! write the same bytes.

use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::{Failure, RunArgs};

/// Floats in CSV tables carry 17 significant digits, enough to round-trip
/// an f64 exactly.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// One run's output sink: resolves the directory, collects the file names,
/// and closes with the manifest.
pub struct Run {
    dir: PathBuf,
    quiet: bool,
    outputs: Vec<String>,
}

impl Run {
    pub fn new(args: &RunArgs) -> Result<Run, Failure> {
        let dir = match &args.out {
            Some(dir) => dir.clone(),
            None => match std::env::var_os("TORUS_ATLAS_OUT") {
                Some(dir) => PathBuf::from(dir),
                None => PathBuf::from("."),
            },
        };
        std::fs::create_dir_all(&dir)
            .map_err(|err| Failure::Validation(format!("output dir {}: {err}", dir.display())))?;
        Ok(Run {
            dir,
            quiet: args.quiet,
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        self.write_bytes(name, contents.as_bytes())
    }

    pub fn write_bytes(&mut self, name: &str, contents: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|err| Failure::Validation(format!("writing {}: {err}", path.display())))?;
        if !self.quiet {
            println!("wrote {}", path.display());
        }
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Write the manifest and finish the run. The manifest records what was
    /// run and from which config bytes, never when.
    pub fn finish(
        self,
        command: &str,
        config_bytes: &[u8],
        seed: Option<u64>,
    ) -> Result<(), Failure> {
        let digest = Sha256::digest(config_bytes);
        let mut hash = String::with_capacity(64);
        for byte in digest {
            hash.push_str(&format!("{byte:02x}"));
        }
        let manifest = serde_json::json!({
            "schema_version": crate::config::SCHEMA_VERSION,
            "command": command,
            "config_sha256": hash,
            "seed": seed,
            "crate_version": env!("CARGO_PKG_VERSION"),
            "outputs": self.outputs,
        });
        let text = format!("{:#}\n", manifest);
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text)
            .map_err(|err| Failure::Validation(format!("writing {}: {err}", path.display())))?;
        if !self.quiet {
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

/// Evenly spaced values across a closed range; a single knot sits at the
/// low end.
pub fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if n == 1 {
                range[0]
            } else {
                range[0] + (range[1] - range[0]) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}
