/// Lowercases and splits `text` into word and punctuation tokens.
///
/// Runs of alphanumeric characters form words; every other non-whitespace
/// character is a token on its own. Whitespace only separates.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_lowercase().collect());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation() {
        assert_eq!(tokenize("The house."), ["the", "house", "."]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n ").is_empty());
    }

    #[test]
    fn collapses_whitespace() {
        assert_eq!(tokenize("  a,b "), ["a", ",", "b"]);
        assert_eq!(tokenize("a \t  b"), ["a", "b"]);
    }

    #[test]
    fn unicode_lowercase() {
        assert_eq!(tokenize("Été À Paris!"), ["été", "à", "paris", "!"]);
    }

    #[test]
    fn reserved_symbols_cannot_be_produced() {
        let toks = tokenize("<pad> <unk>");
        assert!(!toks.iter().any(|t| t == "<pad>" || t == "<unk>"));
    }
}
