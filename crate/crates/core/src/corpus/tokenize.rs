//! Tweet-oriented tokenizer.
//!
//! Rules, applied to the lowercased text:
//!
//! - the text is split on Unicode whitespace into chunks;
//! - a chunk that is exactly `<url>` or `<user>` is kept as is;
//! - from the first `http://`, `https://` or `www.` in a chunk to its end, the
//!   chunk is replaced by the sentinel `<url>`;
//! - `@name` becomes the sentinel `<user>`;
//! - everything else is split on any character that is neither alphanumeric
//!   nor `_`, so `#turnip` yields `turnip`.

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

const URL_MARKERS: [&str; 3] = ["http://", "https://", "www."];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lowered.split_whitespace() {
        if chunk == URL_TOKEN || chunk == USER_TOKEN {
            tokens.push(chunk.to_string());
            continue;
        }
        let url_start = URL_MARKERS.iter().filter_map(|m| chunk.find(m)).min();
        let head = match url_start {
            Some(pos) => &chunk[..pos],
            None => chunk,
        };
        split_words(head, &mut tokens);
        if url_start.is_some() {
            tokens.push(URL_TOKEN.to_string());
        }
    }
    tokens
}

fn split_words(chunk: &str, out: &mut Vec<String>) {
    let mut word = String::new();
    let mut chars = chunk.chars().peekable();
    while let Some(c) = chars.next() {
        if is_word_char(c) {
            word.push(c);
        } else if c == '@' && word.is_empty() && chars.peek().is_some_and(|&n| is_word_char(n)) {
            while chars.peek().is_some_and(|&n| is_word_char(n)) {
                chars.next();
            }
            out.push(USER_TOKEN.to_string());
        } else if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
}

/// Locates `needle` (already tokenized) as a contiguous run inside `haystack`.
pub fn find_subsequence(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}
