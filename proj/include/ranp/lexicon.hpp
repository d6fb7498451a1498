#pragma once

// Exact-match lexicon tagger. Maps words and two-word phrases to classes so
// that small hand-written corpora can be annotated without an NLP pipeline.

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "ranp/semantics.hpp"

namespace ranp {

class Lexicon {
public:
    /// `phrase` is one or two lowercase words; synonyms map to the same class.
    void add(const std::string& phrase, ClassId cls) { entries_[normalize(phrase)] = cls; }

    /// Longest match first: a two-word phrase wins over its first word.
    SemanticProfile tag(const std::string& text) const {
        const auto words = tokenize(text);
        ClassSet verbs, nouns;
        auto put = [&](ClassId c) { (c.pos == PartOfSpeech::Verb ? verbs : nouns).insert(c); };
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (i + 1 < words.size()) {
                auto it = entries_.find(words[i] + " " + words[i + 1]);
                if (it != entries_.end()) {
                    put(it->second);
                    ++i;
                    continue;
                }
            }
            auto it = entries_.find(words[i]);
            if (it != entries_.end()) put(it->second);
        }
        return {std::move(verbs), std::move(nouns)};
    }

private:
    static std::vector<std::string> tokenize(const std::string& text) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : text) {
            if (std::isalnum(static_cast<unsigned char>(ch))) {
                cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            } else if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
        return out;
    }

    static std::string normalize(const std::string& phrase) {
        std::string out;
        for (const auto& w : tokenize(phrase)) {
            if (!out.empty()) out.push_back(' ');
            out += w;
        }
        return out;
    }

    std::map<std::string, ClassId> entries_;
};

}  // namespace ranp
