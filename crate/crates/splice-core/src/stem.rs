//! Deterministic suffix-stripping stemmer (Porter rule set). One pass covers
//! both the stemming and lemmatization normalization used by the feature
//! pipeline; golden tests elsewhere freeze its outputs.

/// True when the byte at `i` acts as a consonant.
fn is_consonant(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => {
            if i == 0 {
                true
            } else {
                !is_consonant(word, i - 1)
            }
        }
        _ => true,
    }
}

/// Porter measure: the number of vowel-consonant sequences in `word`.
fn measure(word: &[u8]) -> usize {
    let mut m = 0;
    let mut i = 0;
    let n = word.len();
    while i < n && is_consonant(word, i) {
        i += 1;
    }
    loop {
        while i < n && !is_consonant(word, i) {
            i += 1;
        }
        if i >= n {
            return m;
        }
        while i < n && is_consonant(word, i) {
            i += 1;
        }
        m += 1;
        if i >= n {
            return m;
        }
    }
}

fn contains_vowel(word: &[u8]) -> bool {
    (0..word.len()).any(|i| !is_consonant(word, i))
}

/// *d: ends with a double consonant.
fn ends_double_consonant(word: &[u8]) -> bool {
    let n = word.len();
    n >= 2 && word[n - 1] == word[n - 2] && is_consonant(word, n - 1)
}

/// *o: ends consonant-vowel-consonant where the final consonant is not w, x
/// or y.
fn ends_cvc(word: &[u8]) -> bool {
    let n = word.len();
    if n < 3 {
        return false;
    }
    is_consonant(word, n - 3)
        && !is_consonant(word, n - 2)
        && is_consonant(word, n - 1)
        && !matches!(word[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(word: &[u8], suffix: &str) -> bool {
    word.len() >= suffix.len() && &word[word.len() - suffix.len()..] == suffix.as_bytes()
}

/// Replace `suffix` by `to` when the remaining stem has measure > `min_m`.
fn replace_if(word: &mut Vec<u8>, suffix: &str, to: &str, min_m: usize) -> bool {
    if !ends_with(word, suffix) {
        return false;
    }
    let stem_len = word.len() - suffix.len();
    if measure(&word[..stem_len]) > min_m {
        word.truncate(stem_len);
        word.extend_from_slice(to.as_bytes());
    }
    true // suffix matched; stop scanning this rule table either way
}

const STEP2: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
];

const STEP3: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4: &[&str] = &[
    "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ism", "ate", "iti", "ous",
    "ive", "ize", "ion", "al", "er", "ic", "ou",
];

/// Stem one lowercase word.
pub fn stem(input: &str) -> String {
    if input.len() <= 2 {
        return input.to_string();
    }
    let mut w: Vec<u8> = input.bytes().collect();

    // Step 1a: plurals.
    if ends_with(&w, "sses") {
        w.truncate(w.len() - 2);
    } else if ends_with(&w, "ies") {
        w.truncate(w.len() - 2);
    } else if !ends_with(&w, "ss") && ends_with(&w, "s") {
        w.truncate(w.len() - 1);
    }

    // Step 1b: -ed / -ing.
    let mut cleanup = false;
    if ends_with(&w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.truncate(w.len() - 1);
        }
    } else if ends_with(&w, "ed") && contains_vowel(&w[..w.len() - 2]) {
        w.truncate(w.len() - 2);
        cleanup = true;
    } else if ends_with(&w, "ing") && contains_vowel(&w[..w.len() - 3]) {
        w.truncate(w.len() - 3);
        cleanup = true;
    }
    if cleanup {
        if ends_with(&w, "at") || ends_with(&w, "bl") || ends_with(&w, "iz") {
            w.push(b'e');
        } else if ends_double_consonant(&w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
            w.truncate(w.len() - 1);
        } else if measure(&w) == 1 && ends_cvc(&w) {
            w.push(b'e');
        }
    }

    // Step 1c: y -> i after a vowel-bearing stem.
    if ends_with(&w, "y") && contains_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }

    // Steps 2 and 3: suffix tables at measure > 0.
    for (suffix, to) in STEP2 {
        if replace_if(&mut w, suffix, to, 0) {
            break;
        }
    }
    for (suffix, to) in STEP3 {
        if replace_if(&mut w, suffix, to, 0) {
            break;
        }
    }

    // Step 4: bare suffix removal at measure > 1.
    for suffix in STEP4 {
        if ends_with(&w, suffix) {
            let stem_len = w.len() - suffix.len();
            if measure(&w[..stem_len]) > 1 {
                // -ion only drops after s or t
                if *suffix == "ion" && !(stem_len > 0 && matches!(w[stem_len - 1], b's' | b't')) {
                    break;
                }
                w.truncate(stem_len);
            }
            break;
        }
    }

    // Step 5a: final -e.
    if ends_with(&w, "e") {
        let stem_len = w.len() - 1;
        let m = measure(&w[..stem_len]);
        if m > 1 || (m == 1 && !ends_cvc(&w[..stem_len])) {
            w.truncate(stem_len);
        }
    }
    // Step 5b: -ll at measure > 1.
    if measure(&w) > 1 && ends_double_consonant(&w) && w[w.len() - 1] == b'l' {
        w.truncate(w.len() - 1);
    }

    String::from_utf8(w).expect("ascii transformations")
}
