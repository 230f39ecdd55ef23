use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ComponentNode;

/// Index of a component label in the [`Alphabet`].
pub type Symbol = u32;

const PRINTABLE: std::ops::RangeInclusive<u8> = b'!'..=b'~';
const PRINTABLE_COUNT: usize = 94;
/// Separator used once the alphabet outgrows single printable characters.
pub const TOKEN_SEPARATOR: char = '.';

/// Component label → structure symbol, assigned in first-seen order.
///
/// While every label has a printable character, structure strings are one
/// character per component. Past 94 labels they switch to decimal symbol
/// indices joined by [`TOKEN_SEPARATOR`]; edit distances are always taken
/// over symbol lists, never bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<(String, Option<char>)>", into = "Vec<(String, Option<char>)>")]
pub struct Alphabet {
    labels: Vec<String>,
    chars: Vec<Option<char>>,
    index: HashMap<String, Symbol>,
}

impl From<Vec<(String, Option<char>)>> for Alphabet {
    fn from(pairs: Vec<(String, Option<char>)>) -> Self {
        let mut a = Alphabet::default();
        for (label, ch) in pairs {
            a.index.insert(label.clone(), a.labels.len() as Symbol);
            a.labels.push(label);
            a.chars.push(ch);
        }
        a
    }
}

impl From<Alphabet> for Vec<(String, Option<char>)> {
    fn from(a: Alphabet) -> Self {
        a.labels.into_iter().zip(a.chars).collect()
    }
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// An alphabet with explicit label → character assignments.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, char)>) -> Self {
        pairs
            .into_iter()
            .map(|(l, c)| (l.to_string(), Some(c)))
            .collect::<Vec<_>>()
            .into()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<Symbol> {
        self.index.get(label).copied()
    }

    pub fn label(&self, sym: Symbol) -> Option<&str> {
        self.labels.get(sym as usize).map(String::as_str)
    }

    /// Symbol for `label`, assigning the next one if unseen.
    pub fn intern(&mut self, label: &str) -> Symbol {
        if let Some(s) = self.get(label) {
            return s;
        }
        let sym = self.labels.len() as Symbol;
        let ch = PRINTABLE
            .map(char::from)
            .find(|c| !self.chars.contains(&Some(*c)));
        self.labels.push(label.to_string());
        self.chars.push(ch);
        self.index.insert(label.to_string(), sym);
        sym
    }

    /// True while every label renders as one printable character.
    pub fn is_single_char(&self) -> bool {
        self.labels.len() <= PRINTABLE_COUNT && self.chars.iter().all(Option::is_some)
    }

    pub fn render(&self, symbols: &[Symbol]) -> String {
        if self.is_single_char() {
            symbols
                .iter()
                .map(|&s| self.chars[s as usize].expect("single-char alphabet"))
                .collect()
        } else {
            symbols
                .iter()
                .map(Symbol::to_string)
                .collect::<Vec<_>>()
                .join(&TOKEN_SEPARATOR.to_string())
        }
    }
}

/// Depth-first symbols of `node`, one per component.
pub fn structure_symbols(node: &ComponentNode, alphabet: &mut Alphabet) -> Vec<Symbol> {
    node.preorder()
        .into_iter()
        .map(|n| alphabet.intern(&n.component_label))
        .collect()
}

/// Depth-first structure string of `node` under `alphabet`.
pub fn structure_string(node: &ComponentNode, alphabet: &mut Alphabet) -> String {
    let syms = structure_symbols(node, alphabet);
    alphabet.render(&syms)
}
