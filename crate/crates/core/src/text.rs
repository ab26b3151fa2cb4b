//! Text folding shared by the query engine and the curation keys.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Strips diacritics (canonical decomposition minus combining marks) and
/// lower-cases.
pub fn fold(text: &str) -> String {
    text.nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .filter(|c| !is_combining_mark(*c))
        .collect()
}

/// Characters that belong to a search token: letters, digits and hyphens.
pub fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

/// Folded maximal runs of letters, digits and hyphens.
pub fn tokenize(text: &str) -> Vec<String> {
    fold(text)
        .split(|c: char| !is_token_char(c))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Comparison key: folded, non-alphanumeric runs collapsed to one space,
/// trimmed.
pub fn normalize_key(text: &str) -> String {
    let folded = fold(text);
    let mut out = String::with_capacity(folded.len());
    for word in folded.split(|c: char| !c.is_alphanumeric()) {
        if word.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_key_examples() {
        assert_eq!(
            normalize_key("Community Structure — in  Networks!"),
            "community structure in networks"
        );
        assert_eq!(normalize_key(""), "");
        assert_eq!(normalize_key("Émile's Networks"), "emile s networks");
        assert_eq!(normalize_key("  --  "), "");
    }

    #[test]
    fn tokens_keep_interior_hyphens() {
        assert_eq!(
            tokenize("Fuzzy c-means (k-Means) clustering, Girvan–Newman"),
            vec!["fuzzy", "c-means", "k-means", "clustering", "girvan", "newman"]
        );
    }

    #[test]
    fn fold_strips_diacritics() {
        assert_eq!(fold("Barabási Érdős"), "barabasi erdos");
        assert_eq!(tokenize("Réseaux"), vec!["reseaux"]);
    }
}
