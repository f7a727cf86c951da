const EXCEPTIONS: &[(&str, &str)] = &[
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("people", "person"),
    ("mice", "mouse"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("geese", "goose"),
    ("lives", "life"),
    ("wives", "wife"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("wolves", "wolf"),
    ("halves", "half"),
    ("thieves", "thief"),
    ("criteria", "criterion"),
    ("phenomena", "phenomenon"),
    ("media", "media"),
    ("data", "data"),
    ("news", "news"),
    ("series", "series"),
    ("species", "species"),
    ("police", "police"),
    ("analyses", "analysis"),
    ("crises", "crisis"),
    ("theses", "thesis"),
];

/// Lemmatize a lowercase noun: exception table first, then suffix rules.
pub fn lemmatize_noun(word: &str) -> String {
    if let Some((_, lemma)) = EXCEPTIONS.iter().find(|(w, _)| *w == word) {
        return (*lemma).to_string();
    }
    let n = word.len();
    if n <= 3 || !word.is_ascii() {
        return word.to_string();
    }
    if word.ends_with("ies") && n > 4 {
        return format!("{}y", &word[..n - 3]);
    }
    if word.ends_with("sses") {
        return word[..n - 2].to_string();
    }
    for suffix in ["xes", "ches", "shes", "zzes"] {
        if word.ends_with(suffix) {
            return word[..n - 2].to_string();
        }
    }
    if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is")
    {
        return word[..n - 1].to_string();
    }
    word.to_string()
}

#[cfg(test)]
mod tests {
    use super::lemmatize_noun;

    #[test]
    fn suffix_rules() {
        for (w, l) in [
            ("dogs", "dog"),
            ("policies", "policy"),
            ("classes", "class"),
            ("taxes", "tax"),
            ("churches", "church"),
            ("status", "status"),
            ("analysis", "analysis"),
            ("gas", "gas"),
            ("immigration", "immigration"),
        ] {
            assert_eq!(lemmatize_noun(w), l, "{w}");
        }
    }

    #[test]
    fn exceptions_win() {
        assert_eq!(lemmatize_noun("children"), "child");
        assert_eq!(lemmatize_noun("people"), "person");
        assert_eq!(lemmatize_noun("news"), "news");
    }
}
