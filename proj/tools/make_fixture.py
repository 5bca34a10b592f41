#!/usr/bin/env python3
"""Writes data/fixtures/synthetic: a 3-event, 4-outlet corpus with planted omissions.

Every article of an event shares the headline and the opening paragraph, so
the articles of one event sit at distance 0 from each other. Important facts
appear verbatim wherever they are present; anything an outlet leaves out is
a planted cherry-pick.
"""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures" / "synthetic"

OUTLETS = [
    {"id": "center1", "name": "Civic Ledger", "domain": "civicledger.example", "bias_category": "Center",
     "bias_ratings": {"MBFC": 0, "AllSides": 0, "AdFontes": 0}},
    {"id": "left1", "name": "Harbor Progressive", "domain": "www.harborprogressive.example", "bias_category": "Left",
     "bias_ratings": {"MBFC": -2, "AllSides": -2, "AdFontes": -2}},
    {"id": "leftcenter1", "name": "Lakeside Tribune", "domain": "lakesidetribune.example",
     "bias_category": "LeftCenter", "bias_ratings": {"MBFC": -1, "AllSides": -1, "AdFontes": -1}},
    {"id": "right1", "name": "Frontier Sentinel", "domain": "frontiersentinel.example", "bias_category": "Right",
     "bias_ratings": {"MBFC": 2, "AllSides": 2, "AdFontes": 2}},
]
DOMAIN = {o["id"]: o["domain"].removeprefix("www.") for o in OUTLETS}

EVENTS = [
    {
        "slug": "flood-barrier",
        "day": "2020-01-07",
        "headline": "County approves funding for a new flood barrier",
        "lede": "Riverside County commissioners approved a flood barrier budget on Tuesday after a long public hearing.",
        "facts": {
            "A": "The barrier will cost 42 million dollars spread over six years of construction.",
            "B": "Engineers warned that the old levee failed safety inspections twice since 2015.",
            "C": "Three commissioners voted against the plan, citing the resulting property tax increase.",
        },
        "articles": {
            "center1": ["A", "B", "C", "Residents packed the auditorium and many waited hours to speak."],
            "left1": ["A", "B", "Environmental groups praised the wetland restoration element of the design.",
                      "Organizers said they will monitor contractor hiring closely."],
            "right1": ["A", "C", "Local business owners questioned whether the timeline is realistic.",
                       "Several speakers asked for an independent audit of past spending."],
            "leftcenter1": ["A", "B", "C", "The state water board must still sign off on the permits."],
        },
    },
    {
        "slug": "transit-fares",
        "day": "2020-01-14",
        "headline": "Metro board votes to raise transit fares in March",
        "lede": "The metropolitan transit board voted on Monday to raise bus and rail fares starting in March.",
        "facts": {
            "A": "A single ride will rise from two dollars to two dollars and fifty cents.",
            "B": "Reduced fares for seniors and students remain frozen until next year.",
        },
        "articles": {
            "center1": ["A", "B", "Board members debated the proposal for nearly four hours.",
                        "Ridership has not recovered to the levels recorded before the recession."],
            "left1": ["A", "B", "Rider advocates handed petitions with thousands of signatures to the clerk.",
                      "Union drivers attended wearing matching green shirts."],
            "right1": ["Taxpayer associations called the agency bloated and poorly managed.",
                       "The agency chief defended recent overtime expenses.",
                       "Critics pointed to empty buses on suburban routes at midday."],
            "leftcenter1": ["A", "Commuters interviewed downtown expressed frustration about delays.",
                            "The board also approved a study of weekend service.",
                            "Bicycle racks will be added to forty more buses."],
        },
    },
    {
        "slug": "library-hours",
        "day": "2020-01-21",
        "headline": "City libraries extend weekend opening hours",
        "lede": "The city library system announced on Wednesday that all branches will open longer on weekends.",
        "facts": {
            "A": "Branches will stay open until eight in the evening on Saturdays and Sundays.",
        },
        "articles": {
            "center1": ["A", "The change follows a survey of more than nine thousand patrons.",
                        "Staffing will come from a reshuffled part-time schedule."],
            "left1": ["A", "Literacy nonprofits welcomed the additional evening reading programs.",
                      "Teenagers told reporters they need quiet study space."],
            "right1": ["A", "The council member for the district said costs must stay flat.",
                       "Some patrons asked for earlier morning openings instead."],
            "leftcenter1": ["A", "Branch managers expect heavier use during final exam weeks.",
                            "The downtown branch will pilot a new self-checkout kiosk."],
        },
    },
]

HOURS = {"center1": 9, "left1": 10, "leftcenter1": 11, "right1": 12}


def article_record(event, outlet_id):
    sentences = [event["facts"].get(s, s) for s in event["articles"][outlet_id]]
    body = event["lede"] + "\n\n" + " ".join(sentences[:2])
    if len(sentences) > 2:
        body += "\n\n" + " ".join(sentences[2:])
    return {
        "url": f"https://{DOMAIN[outlet_id]}/news/{event['day'].replace('-', '/')}/{event['slug']}",
        "outlet_domain": DOMAIN[outlet_id],
        "headline": event["headline"],
        "body": body,
        "published_at": f"{event['day']}T{HOURS[outlet_id]:02d}:00:00Z",
        "section": "news",
    }


def main():
    ROOT.mkdir(parents=True, exist_ok=True)
    (ROOT / "raw").mkdir(exist_ok=True)
    registry = {"window": {"start": "2020-01-01T00:00:00Z", "end": "2020-01-31T23:59:59Z"}, "outlets": OUTLETS}
    (ROOT / "registry.json").write_text(json.dumps(registry, indent=2) + "\n")

    lines = []
    for event in EVENTS:
        for outlet_id in sorted(event["articles"]):
            lines.append(json.dumps(article_record(event, outlet_id)))
    (ROOT / "raw" / "wire.jsonl").write_text("\n".join(lines) + "\n")

    # Records the ingest stage has to reject or drop.
    noise = [
        json.dumps({"url": "https://harborprogressive.example/opinion/2020/01/08/levee-view",
                    "outlet_domain": "harborprogressive.example", "headline": "Why the levee vote matters",
                    "body": "The county finally did the right thing. Voters should remember it.",
                    "published_at": "2020-01-08T08:00:00Z"}),
        json.dumps({"url": "https://civicledger.example/news/2019/12/01/old-story",
                    "outlet_domain": "civicledger.example", "headline": "An older story",
                    "body": "This happened before the window opened.", "published_at": "2019-12-01T08:00:00Z"}),
        json.dumps({"url": "https://unlisted.example/news/2020/01/09/x", "outlet_domain": "unlisted.example",
                    "headline": "Unlisted outlet", "body": "Not in the registry.",
                    "published_at": "2020-01-09T08:00:00Z"}),
        '{"url": "https://civicledger.example/broken", "headline": ',
    ]
    (ROOT / "raw" / "zz_noise.jsonl").write_text("\n".join(noise) + "\n")

    importance = []
    for event in EVENTS:
        for fact in event["facts"].values():
            importance.append({"text": fact, "probability": 0.9})
        importance.append({"text": event["lede"], "probability": 0.3})
    (ROOT / "importance.jsonl").write_text("\n".join(json.dumps(r) for r in importance) + "\n")

    ratings = ["outlet_id,MBFC,AllSides"]
    for o in OUTLETS:
        ratings.append(f"{o['id']},{o['bias_ratings']['MBFC']},{o['bias_ratings']['AllSides']}")
    (ROOT / "ratings.csv").write_text("\n".join(ratings) + "\n")

    # Planted omissions: for each article, the important texts it lacks.
    expected = []
    for event in EVENTS:
        for outlet_id, items in sorted(event["articles"].items()):
            missing = sorted(k for k in event["facts"] if k not in items)
            expected.append({"event": event["slug"], "outlet_id": outlet_id,
                             "missing": [event["facts"][k] for k in missing]})
    (ROOT / "expected.json").write_text(json.dumps(expected, indent=2) + "\n")


if __name__ == "__main__":
    main()
