"""Golden suite: one row per registry operator, pairing an example question
with its expression text and the expected structure.

The second-event selection row uses the distinct "after-select" operator
name rather than the generic day-difference form.
"""

from __future__ import annotations

GOLDEN_ROWS: list[dict] = [
    {
        "op": "more",
        "question": "How many more people were there than households?",
        "parse": "more(people, households)",
        "args": ["people", "households"],
    },
    {
        "op": "more-select",
        "question": "Who has more people in it, Iraq or Iran?",
        "parse": "more-select(Iraq, Iran)",
        "args": ["Iraq", "Iran"],
    },
    {
        "op": "less",
        "question": "How many less households were there compared to housing units?",
        "parse": "less(households, housing units)",
        "args": ["households", "housing units"],
    },
    {
        "op": "less-select",
        "question": "Which gender group is smaller: females or male?",
        "parse": "less-select(females, male)",
        "args": ["females", "male"],
    },
    {
        "op": "cu",
        "question": "How many percent of people were not white?",
        "parse": "cu(white)",
        "args": ["white"],
    },
    {
        "op": "completion-more",
        "question": "How many points were the Bears winning by at halftime?",
        "parse": "completion-more(Bears)",
        "args": ["Bears"],
    },
    {
        "op": "completion-less",
        "question": "How many points did the Lions lose the game by?",
        "parse": "completion-less(Lions)",
        "args": ["Lions"],
    },
    {
        "op": "after",
        "question": "How many days after the stamps arrived were they placed on sale?",
        "parse": "after(stamps arrived, they placed on sale)",
        "args": ["stamps arrived", "they placed on sale"],
    },
    {
        "op": "after-select",
        "question": "What happened second: Poeymirau and Freydenberg launched attecks or significant riots?",
        "parse": "after-select(Poeymirau and Freydenberg launched attecks, significant riots)",
        "args": ["Poeymirau and Freydenberg launched attecks", "significant riots"],
    },
    {
        "op": "before",
        "question": "How many days before the Italians invaded Trieste was the fleet of the Austro-Hungarians destroyed?",
        "parse": "before(Italians invaded Trieste, fleet of the Austro-Hungarians destroyed)",
        "args": ["Italians invaded Trieste", "fleet of the Austro-Hungarians destroyed"],
    },
    {
        "op": "before-select",
        "question": "Which happened first, the Battle of Vittorio Veneto or the Armistice of Villa Giusti?",
        "parse": "before-select(Battle of Vittorio Veneto, Armistice of Villa Giusti)",
        "args": ["Battle of Vittorio Veneto", "Armistice of Villa Giusti"],
    },
    {
        "op": "sum",
        "question": "How many percents of the racial makeup of the county was either Asian or Pacific Islander?",
        "parse": "sum(Asian, Pacific Islander)",
        "args": ["Asian", "Pacific Islander"],
    },
    {
        "op": "count",
        "question": "How many times did Manning throw to Clark?",
        "parse": "count(times did Manning throw to Clark)",
        "args": ["times did Manning throw to Clark"],
    },
    {
        "op": "time-span",
        "question": "How many years did Micheal Tippets The Knot Garden use a classical guitar?",
        "parse": "time-span(Micheal Tippets The Knot Garden use a classical guitar)",
        "args": ["Micheal Tippets The Knot Garden use a classical guitar"],
    },
    {
        "op": "span",
        "question": "What event finalized the Lordship of Dernbach being transferred to nassau?",
        "parse": "span(finalized the Lordship of Dernbach being transferred to nassau)",
        "args": ["finalized the Lordship of Dernbach being transferred to nassau"],
    },
    {
        "op": "sort",
        "question": "Which racial group made up the smallest percentage of the population?",
        "parse": "sort(smallest, racial group)",
        "args": ["smallest", "racial group"],
    },
    {
        "op": "filter",
        "question": "Which groups in percent are larger than 21%?",
        "parse": "filter(larger than 21%, groups)",
        "args": ["larger than 21%", "groups"],
    },
]
