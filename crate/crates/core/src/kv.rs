//! Plain-text `key = value` files with optional `[section]` headers.
//!
//! Used for config files, model artifacts and run manifests. Field order is
//! preserved on both read and write so artifacts diff cleanly.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl KvDoc {
    pub fn new() -> Self {
        KvDoc {
            sections: vec![(String::new(), Vec::new())],
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDoc::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                doc.sections.push((name.trim().to_string(), Vec::new()));
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: lineno + 1,
                column: "<line>".into(),
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            doc.sections
                .last_mut()
                .expect("root section")
                .1
                .push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(doc)
    }

    /// Starts a new section; subsequent `push` calls land in it.
    pub fn section(&mut self, name: &str) -> &mut Self {
        self.sections.push((name.to_string(), Vec::new()));
        self
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.sections
            .last_mut()
            .expect("root section")
            .1
            .push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let joined = values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        self.push(key, joined)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.iter().any(|(s, _)| s == name)
    }

    /// All sections with the given name, in file order.
    pub fn sections_named<'a>(&'a self, name: &str) -> impl Iterator<Item = KvSection<'a>> + 'a {
        let name = name.to_string();
        self.sections
            .iter()
            .filter(move |(s, _)| *s == name)
            .map(|(s, entries)| KvSection { name: s, entries })
    }

    pub fn get_section(&self, name: &str) -> Result<KvSection<'_>> {
        self.sections_named(name)
            .next()
            .ok_or_else(|| Error::Schema(format!("missing section [{name}]")))
    }

    pub fn root(&self) -> KvSection<'_> {
        let (name, entries) = &self.sections[0];
        KvSection { name, entries }
    }

    /// Every `(section, key, value)` triple in file order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.sections
            .iter()
            .flat_map(|(s, e)| e.iter().map(move |(k, v)| (s.as_str(), k.as_str(), v.as_str())))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{name}]\n"));
            }
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KvSection<'a> {
    name: &'a str,
    entries: &'a [(String, String)],
}

impl<'a> KvSection<'a> {
    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn req(&self, key: &str) -> Result<&'a str> {
        self.raw(key).ok_or_else(|| {
            Error::Schema(format!("missing key `{key}` in section [{}]", self.name))
        })
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let v = self.req(key)?;
        v.parse().map_err(|e: T::Err| Error::Parse {
            row: 0,
            column: key.to_string(),
            message: format!("`{v}`: {e}"),
        })
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(_) => self.parse(key),
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.req(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    row: 0,
                    column: key.to_string(),
                    message: format!("`{t}`: {e}"),
                })
            })
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &'a str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let doc = KvDoc::parse("# c\na = 1\n\n[s]\nb = x y\n").unwrap();
        assert_eq!(doc.root().parse::<i32>("a").unwrap(), 1);
        assert_eq!(doc.get_section("s").unwrap().req("b").unwrap(), "x y");
    }

    #[test]
    fn render_round_trips() {
        let mut doc = KvDoc::new();
        doc.push("family", "glm").section("coef").push_list("beta", &[0.1, -2.5e-17]);
        let text = doc.render();
        let back = KvDoc::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.get_section("coef").unwrap().list("beta").unwrap(), vec![0.1, -2.5e-17]);
    }

    #[test]
    fn bad_line_is_an_error() {
        assert!(KvDoc::parse("no equals sign").is_err());
    }
}
