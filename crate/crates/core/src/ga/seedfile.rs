//! Line-oriented seed file carrying evolved antibody sets.
//!
//! ```text
//! SEEDv1 v=5 y=8 profile=slow
//! SET lt=212.352 lc=7
//! 0: 0;305;45;80;L;-;-;12.5
//! ...
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::behavior::{Antibody, LimitProfile};
use crate::perception::AntigenMode;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub lt: f64,
    pub lc: u32,
    /// One (antibody, cumulative score) per antigen.
    pub antibodies: Vec<(Antibody, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFile {
    pub antigens: usize,
    pub profile: String,
    pub sets: Vec<SeedSet>,
}

impl SeedFile {
    pub fn mode(&self) -> Option<AntigenMode> {
        AntigenMode::from_count(self.antigens)
    }

    pub fn limits(&self) -> Option<LimitProfile> {
        LimitProfile::by_name(&self.profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for SeedFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "SEEDv1 v={} y={} profile={}",
            self.sets.len(),
            self.antigens,
            self.profile
        )?;
        for set in &self.sets {
            writeln!(f, "SET lt={} lc={}", set.lt, set.lc)?;
            for (j, (ab, e)) in set.antibodies.iter().enumerate() {
                writeln!(f, "{j}: {ab};{e}")?;
            }
        }
        Ok(())
    }
}

fn key_values<'a>(line: &'a str, line_no: usize, keys: &[&str]) -> Result<Vec<&'a str>> {
    let mut out = Vec::with_capacity(keys.len());
    let mut parts = line.split_whitespace().skip(1);
    for key in keys {
        let part = parts.next().ok_or_else(|| Error::SeedParse {
            line: line_no,
            msg: format!("missing `{key}=`"),
        })?;
        let value = part
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| Error::SeedParse {
                line: line_no,
                msg: format!("expected `{key}=...`, found `{part}`"),
            })?;
        out.push(value);
    }
    Ok(out)
}

fn parse_num<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::SeedParse {
        line,
        msg: format!("bad {what} `{s}`"),
    })
}

impl FromStr for SeedFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (no, header) = lines.next().ok_or(Error::SeedParse {
            line: 1,
            msg: "empty seed file".into(),
        })?;
        if !header.starts_with("SEEDv1") {
            return Err(Error::SeedParse {
                line: no,
                msg: "expected `SEEDv1` header".into(),
            });
        }
        let kv = key_values(header, no, &["v", "y", "profile"])?;
        let v: usize = parse_num(kv[0], no, "set count")?;
        let y: usize = parse_num(kv[1], no, "antigen count")?;
        let profile = kv[2].to_string();
        if LimitProfile::by_name(&profile).is_none() {
            return Err(Error::SeedParse {
                line: no,
                msg: format!("unknown limit profile `{profile}`"),
            });
        }

        let mut sets = Vec::with_capacity(v);
        for _ in 0..v {
            let (no, line) = lines.next().ok_or(Error::SeedParse {
                line: no,
                msg: format!("expected {v} sets, found {}", sets.len()),
            })?;
            if !line.starts_with("SET") {
                return Err(Error::SeedParse {
                    line: no,
                    msg: "expected `SET lt=.. lc=..`".into(),
                });
            }
            let kv = key_values(line, no, &["lt", "lc"])?;
            let lt: f64 = parse_num(kv[0], no, "lt")?;
            let lc: u32 = parse_num(kv[1], no, "lc")?;
            let mut antibodies = Vec::with_capacity(y);
            for j in 0..y {
                let (no, line) = lines.next().ok_or(Error::SeedParse {
                    line: no,
                    msg: format!("set is missing antibody line for antigen {j}"),
                })?;
                let (idx, rest) = line.split_once(':').ok_or(Error::SeedParse {
                    line: no,
                    msg: "expected `<antigen>: U;S;F;A;D;RF;RA;E`".into(),
                })?;
                let idx: usize = parse_num(idx.trim(), no, "antigen index")?;
                if idx != j {
                    return Err(Error::SeedParse {
                        line: no,
                        msg: format!("expected antigen {j}, found {idx}"),
                    });
                }
                let (ab, e) = rest.trim().rsplit_once(';').ok_or(Error::SeedParse {
                    line: no,
                    msg: "missing cumulative score".into(),
                })?;
                let ab: Antibody = ab.parse().map_err(|e: Error| Error::SeedParse {
                    line: no,
                    msg: e.to_string(),
                })?;
                let e: f64 = parse_num(e.trim(), no, "cumulative score")?;
                antibodies.push((ab, e));
            }
            sets.push(SeedSet { lt, lc, antibodies });
        }
        if let Some((no, _)) = lines.next() {
            return Err(Error::SeedParse {
                line: no,
                msg: "trailing content after the last set".into(),
            });
        }
        Ok(SeedFile {
            antigens: y,
            profile,
            sets,
        })
    }
}
