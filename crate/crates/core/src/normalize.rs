//! Light text normalization and a deterministic rule-based tokenizer.
//!
//! Normalization only removes diacritics and masks URLs, user mentions and
//! hashtags; no orthographic rewriting (alef/ya unification etc.) is done.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::char::is_combining_mark;

use crate::error::{Error, Result};

/// Identifies the tokenization rule set in reports and model headers.
pub const TOKENIZER_VERSION: &str = "mtprep-rules-1";

const TATWEEL: char = '\u{0640}';

/// Code points deleted by [`strip_diacritics`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiacriticSet {
    code_points: BTreeSet<char>,
}

impl DiacriticSet {
    /// Every member must be a combining mark or tatweel.
    pub fn new(code_points: impl IntoIterator<Item = char>) -> Result<Self> {
        let code_points: BTreeSet<char> = code_points.into_iter().collect();
        if let Some(bad) = code_points
            .iter()
            .find(|&&c| c != TATWEEL && !is_combining_mark(c))
        {
            return Err(Error::InvalidParameter(format!(
                "U+{:04X} is neither a combining mark nor tatweel",
                *bad as u32
            )));
        }
        Ok(DiacriticSet { code_points })
    }

    pub fn contains(&self, c: char) -> bool {
        self.code_points.contains(&c)
    }

    pub fn len(&self) -> usize {
        self.code_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code_points.is_empty()
    }
}

impl Default for DiacriticSet {
    /// Arabic harakat U+064B..=U+065F, superscript alef U+0670 and tatweel.
    fn default() -> Self {
        let harakat = '\u{064B}'..='\u{065F}';
        DiacriticSet::new(harakat.chain(['\u{0670}', TATWEEL])).expect("default set is valid")
    }
}

/// Deletes every code point in `set`, keeping everything else in order.
pub fn strip_diacritics(text: &str, set: &DiacriticSet) -> String {
    if !text.chars().any(|c| set.contains(c)) {
        return text.to_string();
    }
    text.chars().filter(|&c| !set.contains(c)).collect()
}

struct Patterns {
    url: Regex,
    mention: Regex,
    hashtag: Regex,
}

fn patterns() -> &'static Patterns {
    static PATTERNS: OnceLock<Patterns> = OnceLock::new();
    PATTERNS.get_or_init(|| Patterns {
        url: Regex::new(r"(?i:https?://|www\.)\S+").unwrap(),
        mention: Regex::new(r"@[\p{L}\p{N}_]+").unwrap(),
        hashtag: Regex::new(r"#[\p{L}\p{N}_]+").unwrap(),
    })
}

/// Replacement tokens for [`mask_entities`].
///
/// Matching ignores code points of `transparent`, so masking and
/// diacritic stripping commute when both use the same set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskRules {
    url_token: String,
    mention_token: String,
    hashtag_token: String,
    transparent: DiacriticSet,
}

impl MaskRules {
    pub fn new(
        url_token: &str,
        mention_token: &str,
        hashtag_token: &str,
        transparent: DiacriticSet,
    ) -> Result<Self> {
        let p = patterns();
        for token in [url_token, mention_token, hashtag_token] {
            let bad = token.is_empty()
                || token.chars().any(|c| c.is_whitespace() || transparent.contains(c))
                || [&p.url, &p.mention, &p.hashtag].iter().any(|re| re.is_match(token))
                || token.contains(['@', '#', ':', '.']);
            if bad {
                return Err(Error::InvalidParameter(format!("unusable mask token `{token}`")));
            }
        }
        Ok(MaskRules {
            url_token: url_token.to_string(),
            mention_token: mention_token.to_string(),
            hashtag_token: hashtag_token.to_string(),
            transparent,
        })
    }

    pub fn tokens(&self) -> [&str; 3] {
        [&self.url_token, &self.mention_token, &self.hashtag_token]
    }
}

impl Default for MaskRules {
    fn default() -> Self {
        MaskRules::new("URL", "USER", "HASHTAG", DiacriticSet::default()).unwrap()
    }
}

/// Replaces URLs, then mentions, then hashtags with their tokens.
///
/// The three passes repeat until nothing changes, so the result is a fixed
/// point (`"@#x"` becomes `"@HASHTAG"` after one round and `"USER"` after
/// the second).
pub fn mask_entities(text: &str, rules: &MaskRules) -> String {
    let p = patterns();
    let passes = [
        (&p.url, rules.url_token.as_str()),
        (&p.mention, rules.mention_token.as_str()),
        (&p.hashtag, rules.hashtag_token.as_str()),
    ];
    let mut current: Option<String> = None;
    loop {
        let mut changed = false;
        for (re, token) in passes {
            let text_now = current.as_deref().unwrap_or(text);
            if let Some(next) = mask_pass(text_now, re, token, &rules.transparent) {
                current = Some(next);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    current.unwrap_or_else(|| text.to_string())
}

/// One replacement pass matched against the diacritic-free skeleton of
/// `text`. Returns `None` when nothing matched.
fn mask_pass(text: &str, re: &Regex, token: &str, transparent: &DiacriticSet) -> Option<String> {
    if !text.chars().any(|c| transparent.contains(c)) {
        if !re.is_match(text) {
            return None;
        }
        return Some(re.replace_all(text, token).into_owned());
    }

    // skeleton byte offset -> original [start, end) of that char
    let mut skeleton = String::with_capacity(text.len());
    let mut skel_offsets = Vec::new();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for (start, c) in text.char_indices() {
        if transparent.contains(c) {
            continue;
        }
        skel_offsets.push(skeleton.len());
        spans.push((start, start + c.len_utf8()));
        skeleton.push(c);
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    let mut matched = false;
    for m in re.find_iter(&skeleton) {
        let first = skel_offsets.binary_search(&m.start()).expect("char boundary");
        let last = skel_offsets.partition_point(|&o| o < m.end()) - 1;
        // trailing marks belong to the last matched letter
        let orig_end = spans.get(last + 1).map_or(text.len(), |s| s.0);
        let orig_start = spans[first].0;
        out.push_str(&text[cursor..orig_start]);
        out.push_str(token);
        cursor = orig_end;
        matched = true;
    }
    if !matched {
        return None;
    }
    out.push_str(&text[cursor..]);
    Some(out)
}

/// Punctuation detached from word edges by [`tokenize`].
pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{060C}' // arabic comma
                | '\u{061B}' // arabic semicolon
                | '\u{061F}' // arabic question mark
                | '\u{066A}' // arabic percent
                | '\u{06D4}' // arabic full stop
                | '«'
                | '»'
                | '“'
                | '”'
                | '‘'
                | '’'
                | '„'
                | '…'
                | '–'
                | '—'
                | '¡'
                | '¿'
        )
}

/// Splits on whitespace, then peels punctuation off both ends of each
/// chunk, one token per punctuation character. The interior of a chunk is
/// never split, which keeps `3.5`, `don't` and mask tokens whole.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let lead = chunk.len() - chunk.trim_start_matches(is_punct).len();
        let body = &chunk[lead..];
        let core = body.trim_end_matches(is_punct);
        tokens.extend(chunk[..lead].chars().map(String::from));
        if !core.is_empty() {
            tokens.push(core.to_string());
        }
        tokens.extend(body[core.len()..].chars().map(String::from));
    }
    tokens
}

fn attaches_left(token: &str) -> bool {
    matches!(
        token,
        "," | "." | "!" | "?" | ";" | ":" | ")" | "]" | "}" | "%" | "\u{060C}" | "\u{061B}" | "\u{061F}"
            | "\u{066A}" | "\u{06D4}" | "»" | "”" | "’" | "…"
    )
}

fn attaches_right(token: &str) -> bool {
    matches!(token, "(" | "[" | "{" | "«" | "“" | "‘" | "¿" | "¡" | "„")
}

/// Joins tokens with single spaces, then glues closing punctuation to the
/// preceding token and opening punctuation to the following one. Straight
/// quotes alternate between opening and closing.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = false;
    let mut open_quotes = [false; 2];
    for (i, token) in tokens.iter().enumerate() {
        let token = token.as_ref();
        let (left, right) = match token {
            "\"" | "'" => {
                let slot = &mut open_quotes[usize::from(token == "'")];
                *slot = !*slot;
                (!*slot, *slot)
            }
            _ => (attaches_left(token), attaches_right(token)),
        };
        if i > 0 && !left && !glue_next {
            out.push(' ');
        }
        out.push_str(token);
        glue_next = right;
    }
    out
}

/// Diacritic stripping plus entity masking, the preprocessing applied to
/// both sides of every pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Normalizer {
    pub diacritics: DiacriticSet,
    pub rules: MaskRules,
}

impl Normalizer {
    pub fn normalize(&self, text: &str) -> String {
        mask_entities(&strip_diacritics(text, &self.diacritics), &self.rules)
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        tokenize(&self.normalize(text))
    }
}
