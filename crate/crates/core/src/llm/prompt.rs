//! Zero-shot prompt templates.

use std::fmt;
use std::str::FromStr;

use crate::corpus::InstancePair;
use crate::{Error, Result};

const INSTRUCTION_CONTEXT: &str = " \n    Given two tweets, their dates and a target word in the form of \"### Tweet1: ... Date: ... ### Tweet2: ... Date: ... ### Target Word: ...\", \n    Tell me whether the meaning of the target word is different in the two tweets. Furthermore, only respond with 0 if it is a yes and 1 if it is a no. Do not explain.\n";

const NO_DATE_QUERY: &str = "\n### Tweet1: {tweet1} ### Tweet2: {tweet2} ### Target Word: {word}\n";

const DATE_QUERY: &str =
    "\n### Tweet1: {tweet1} Date: {date1} ### Tweet2: {tweet2} Date: {date2} ### Target Word: {word}\n";

const QIQ_CONTEXT: &str = "\nYou are given two tweets with their respective dates of creation and a question in the format of Tweet-1: ... Tweet-2: ... Question: ...\nAnswer the question with 0 if it is a yes and 1 if it is a no. Do not explain.\n";

const QIQ_QUERY: &str = "\nTweet-1: {tweet1} Date: {date1} Tweet-2: {tweet2} Date: {date2} Question: Is the meaning of {word} different in the last 2 tweets?\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptTemplate {
    NoDate,
    Date,
    /// Question-in-query: the task is posed as a question.
    Qiq,
}

impl PromptTemplate {
    pub const ALL: [PromptTemplate; 3] = [PromptTemplate::NoDate, PromptTemplate::Date, PromptTemplate::Qiq];

    /// System-role text.
    pub fn context(self) -> &'static str {
        match self {
            PromptTemplate::NoDate | PromptTemplate::Date => INSTRUCTION_CONTEXT,
            PromptTemplate::Qiq => QIQ_CONTEXT,
        }
    }

    /// User-role text with `{tweet1}`, `{tweet2}`, `{date1}`, `{date2}`, `{word}` placeholders.
    pub fn query(self) -> &'static str {
        match self {
            PromptTemplate::NoDate => NO_DATE_QUERY,
            PromptTemplate::Date => DATE_QUERY,
            PromptTemplate::Qiq => QIQ_QUERY,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptTemplate::NoDate => "no_date",
            PromptTemplate::Date => "date",
            PromptTemplate::Qiq => "qiq",
        }
    }
}

impl fmt::Display for PromptTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "no_date" | "nodate" => Ok(PromptTemplate::NoDate),
            "date" => Ok(PromptTemplate::Date),
            "qiq" => Ok(PromptTemplate::Qiq),
            other => Err(Error::invalid(
                "template",
                format!("unknown template `{other}` (expected no_date, date or qiq)"),
            )),
        }
    }
}

/// Values for the template placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptFields<'a> {
    pub tweet1: &'a str,
    pub tweet2: &'a str,
    pub date1: &'a str,
    pub date2: &'a str,
    pub word: &'a str,
}

impl PromptFields<'_> {
    fn lookup(&self, name: &str) -> Option<&str> {
        match name {
            "tweet1" => Some(self.tweet1),
            "tweet2" => Some(self.tweet2),
            "date1" => Some(self.date1),
            "date2" => Some(self.date2),
            "word" => Some(self.word),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub context: String,
    pub query: String,
}

/// Single left-to-right pass; substituted values are never rescanned.
fn substitute(template: &str, fields: &PromptFields<'_>) -> Result<String> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| Error::invalid("template", "unterminated placeholder"))?;
        let name = &after[..close];
        let value = fields
            .lookup(name)
            .ok_or_else(|| Error::invalid("template", format!("placeholder `{{{name}}}` has no value")))?;
        if value.trim().is_empty() {
            return Err(Error::invalid("template", format!("field `{name}` is empty")));
        }
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

pub fn render_fields(template: PromptTemplate, fields: &PromptFields<'_>) -> Result<RenderedPrompt> {
    Ok(RenderedPrompt {
        context: template.context().to_string(),
        query: substitute(template.query(), fields)?,
    })
}

/// Renders the pair's texts, ISO dates and normalized target.
pub fn render_prompt(template: PromptTemplate, pair: &InstancePair) -> Result<RenderedPrompt> {
    let (date1, date2) = (pair.date1.to_string(), pair.date2.to_string());
    render_fields(
        template,
        &PromptFields {
            tweet1: &pair.text1,
            tweet2: &pair.text2,
            date1: &date1,
            date2: &date2,
            word: &pair.target,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fields<'a>(t1: &'a str, t2: &'a str, w: &'a str) -> PromptFields<'a> {
        PromptFields {
            tweet1: t1,
            tweet2: t2,
            date1: "2019-01-01",
            date2: "2020-01-01",
            word: w,
        }
    }

    #[test]
    fn no_date_query() {
        let p = render_fields(PromptTemplate::NoDate, &fields("x", "y", "w")).unwrap();
        assert!(p.query.contains("### Tweet1: x ### Tweet2: y ### Target Word: w"));
        assert!(!p.query.contains("Date"));
    }

    #[test]
    fn qiq_ends_with_question() {
        let p = render_fields(PromptTemplate::Qiq, &fields("x", "y", "w")).unwrap();
        assert!(p
            .query
            .ends_with("Question: Is the meaning of w different in the last 2 tweets?\n"));
    }

    #[test]
    fn empty_field_rejected() {
        assert!(render_fields(PromptTemplate::NoDate, &fields("", "y", "w")).is_err());
        assert!(render_fields(PromptTemplate::Date, &fields("x", "y", " ")).is_err());
    }

    #[test]
    fn braces_in_values_are_literal() {
        let p = render_fields(PromptTemplate::NoDate, &fields("{word}", "y", "w")).unwrap();
        assert!(p.query.contains("Tweet1: {word} ###"));
    }

    #[test]
    fn unknown_placeholder() {
        assert!(substitute("a {nope} b", &fields("x", "y", "w")).is_err());
        assert!(substitute("a {tweet1", &fields("x", "y", "w")).is_err());
    }

    #[test]
    fn names_round_trip() {
        for t in PromptTemplate::ALL {
            assert_eq!(t.name().parse::<PromptTemplate>().unwrap(), t);
        }
        assert!("cot".parse::<PromptTemplate>().is_err());
    }

    proptest! {
        #[test]
        fn rendering_is_injective(
            a in "[a-z ]{1,12}[a-z]", b in "[a-z ]{1,12}[a-z]", w in "[a-z]{1,6}",
            a2 in "[a-z ]{1,12}[a-z]", b2 in "[a-z ]{1,12}[a-z]", w2 in "[a-z]{1,6}",
        ) {
            for t in PromptTemplate::ALL {
                let p = render_fields(t, &fields(&a, &b, &w)).unwrap();
                let q = render_fields(t, &fields(&a2, &b2, &w2)).unwrap();
                prop_assert_eq!(p == q, a == a2 && b == b2 && w == w2);
            }
        }
    }
}
