//! Per-type, per-locale lists of replacement entity surface forms.
//!
//! The file format is a JSON object mapping locale code → entity type →
//! array of strings; each string is whitespace-split into tokens at load
//! time. A bundled sample covering PER and LOC for en-US/en-CA/en-IN,
//! de-DE/de-AT/de-CH and hi-IN ships with the crate.

use std::collections::BTreeMap;

use crate::corpus::{tokenize, Token};

const BUILTIN_JSON: &str = include_str!("../assets/gazetteers.json");

#[derive(Debug, thiserror::Error)]
pub enum GazetteerError {
    #[error("gazetteer JSON is not an object of locale -> type -> [string]: {0}")]
    Format(String),
    #[error("gazetteer entry ({entity_type}, {locale}) is empty")]
    EmptyEntry { entity_type: String, locale: String },
    #[error("gazetteer surface form `{0}` contains no tokens")]
    EmptySurface(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Replacement surface forms keyed by `(entity type, locale)`.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: BTreeMap<(String, String), Vec<Vec<Token>>>,
    locales: Vec<String>,
}

impl Gazetteer {
    /// The sample gazetteer bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_json_str(BUILTIN_JSON).expect("bundled gazetteer must parse")
    }

    /// Load from the JSON file format (locale → type → array of strings).
    pub fn from_json_str(json: &str) -> Result<Self, GazetteerError> {
        let value: serde_json::Value = serde_json::from_str(json)?;
        let top = value
            .as_object()
            .ok_or_else(|| GazetteerError::Format("top level is not an object".into()))?;
        let mut entries = BTreeMap::new();
        let mut locales = Vec::new();
        for (locale, by_type) in top {
            locales.push(locale.clone());
            let by_type = by_type.as_object().ok_or_else(|| {
                GazetteerError::Format(format!("locale `{locale}` is not an object"))
            })?;
            for (entity_type, forms) in by_type {
                let forms = forms.as_array().ok_or_else(|| {
                    GazetteerError::Format(format!("({entity_type}, {locale}) is not an array"))
                })?;
                let mut surface_lists = Vec::with_capacity(forms.len());
                for form in forms {
                    let text = form.as_str().ok_or_else(|| {
                        GazetteerError::Format(format!(
                            "({entity_type}, {locale}) contains a non-string entry"
                        ))
                    })?;
                    let tokens = tokenize(text);
                    if tokens.is_empty() {
                        return Err(GazetteerError::EmptySurface(text.to_string()));
                    }
                    surface_lists.push(tokens);
                }
                if surface_lists.is_empty() {
                    return Err(GazetteerError::EmptyEntry {
                        entity_type: entity_type.clone(),
                        locale: locale.clone(),
                    });
                }
                entries.insert((entity_type.clone(), locale.clone()), surface_lists);
            }
        }
        Ok(Self { entries, locales })
    }

    pub fn locales(&self) -> &[String] {
        &self.locales
    }

    /// Surface forms for `(entity_type, locale)`, if present.
    pub fn forms(&self, entity_type: &str, locale: &str) -> Option<&[Vec<Token>]> {
        self.entries
            .get(&(entity_type.to_string(), locale.to_string()))
            .map(Vec::as_slice)
    }

    pub fn has_entry(&self, entity_type: &str, locale: &str) -> bool {
        self.forms(entity_type, locale).is_some()
    }

    /// True when `surface` is one of the listed forms for `entity_type` in
    /// any locale.
    pub fn contains_surface(&self, entity_type: &str, surface: &[Token]) -> bool {
        self.entries
            .iter()
            .filter(|((ty, _), _)| ty == entity_type)
            .any(|(_, forms)| forms.iter().any(|f| f == surface))
    }
}
