"""Record a scripted demo-service session to a JSON fixture.

The frontend's unit tests replay this recording, so their goldens stay
deterministic without a running server. Regenerate after API changes:

    python scripts/record_session.py frontend/test/fixtures/session.json
"""

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from autopriv.demo import DemoSession, ScenarioConfig, create_demo_app

ROOT = Path(__file__).resolve().parent.parent
MANIFEST = (ROOT / "fixtures" / "manifests_lbs" / "poifinder.json").read_text()
APP_ID = "com.example.poifinder"


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        ROOT / "frontend" / "test" / "fixtures" / "session.json"
    session = DemoSession(ScenarioConfig.from_json(ROOT / "fixtures" / "scenario_ui.json"))
    client = TestClient(create_demo_app(session))

    recording = {"manifest": json.loads(MANIFEST)}
    recording["state_initial"] = client.get("/api/state").json()
    recording["install"] = client.post("/api/apps", content=MANIFEST).json()
    client.post("/api/playback", json={"action": "step", "n": 30})
    recording["query_1"] = client.post(
        "/api/query",
        json={"app_id": APP_ID, "category": "restaurant", "k": 5}).json()
    client.post("/api/playback", json={"action": "step", "n": 60})
    recording["query_2"] = client.post(
        "/api/query",
        json={"app_id": APP_ID, "category": "restaurant", "k": 5}).json()
    recording["state_final"] = client.get("/api/state").json()
    recording["pets"] = client.get("/api/pets").json()
    recording["selection"] = client.get(
        "/api/selection", params={"layer": "processing", "principles": "PL,DM"}).json()

    bad = client.post("/api/apps", content=b"{not a manifest")
    recording["install_error"] = {"status": bad.status_code, "body": bad.json()}

    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(recording, indent=2) + "\n")
    print(f"recorded session -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
