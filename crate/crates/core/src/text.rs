//! Character-offset text helpers shared by the chunkers, the embedder and
//! the mock providers.
//!
//! All offsets in this crate count Unicode scalar values, not bytes, so a
//! 1000-character window means the same thing for Urdu and English text.

/// Byte positions of every character boundary of a string.
///
/// `boundaries[i]` is the byte offset of character `i`; the final entry is
/// `text.len()`.
#[derive(Debug, Clone)]
pub struct CharIndex<'a> {
    text: &'a str,
    boundaries: Vec<usize>,
}

impl<'a> CharIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        boundaries.push(text.len());
        Self { text, boundaries }
    }

    /// Number of characters.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn text(&self) -> &'a str {
        self.text
    }

    /// Slice by character offsets `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> &'a str {
        &self.text[self.boundaries[start]..self.boundaries[end]]
    }

    /// Character offset of a byte offset that lies on a char boundary.
    pub fn char_offset(&self, byte: usize) -> usize {
        self.boundaries
            .binary_search(&byte)
            .expect("byte offset must lie on a char boundary")
    }
}

/// Number of characters in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Lowercased alphanumeric word tokens.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Sentence terminators. A terminator ends a sentence only when followed by
/// whitespace or the end of the text.
pub fn is_sentence_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | '؟')
}

/// Sentence spans `[start, end)` in character offsets, with surrounding
/// whitespace excluded. Text without terminators is a single sentence.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut last_non_ws = 0;
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            continue;
        }
        if start.is_none() {
            start = Some(i);
        }
        last_non_ws = i;
        let next_breaks = chars.get(i + 1).is_none_or(|n| n.is_whitespace());
        if is_sentence_terminator(c) && next_breaks {
            spans.push((start.take().unwrap(), i + 1));
        }
    }
    if let Some(s) = start {
        spans.push((s, last_non_ws + 1));
    }
    spans
}

/// Paragraph spans: maximal runs of non-blank lines. A blank line is empty
/// or whitespace-only. Each span runs from the first character of its first
/// line to the end of its last line, excluding the final line break.
pub fn paragraph_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    let mut offset = 0;
    for line in text.split('\n') {
        let len = char_len(line);
        if line.trim().is_empty() {
            if let Some(span) = current.take() {
                spans.push(span);
            }
        } else {
            // trailing \r is already normalized away on load; keep the line intact
            let end = offset + len;
            current = Some(match current {
                Some((s, _)) => (s, end),
                None => (offset, end),
            });
        }
        offset += len + 1;
    }
    if let Some(span) = current {
        spans.push(span);
    }
    spans
}

/// Line spans `[start, end)` (line break excluded).
pub fn line_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut offset = 0;
    for line in text.split('\n') {
        let len = char_len(line);
        spans.push((offset, offset + len));
        offset += len + 1;
    }
    spans
}

/// Shrink `[start, end)` so it neither begins nor ends with whitespace.
/// Returns `None` when the span holds only whitespace.
pub fn trim_span(chars: &[char], start: usize, end: usize) -> Option<(usize, usize)> {
    let mut s = start;
    let mut e = end;
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    (s < e).then_some((s, e))
}
