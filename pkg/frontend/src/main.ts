import { ApiClient } from "./api.js";
import { ScenarioStore } from "./state.js";
import { render } from "./view.js";

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8000";

const store = new ScenarioStore(new ApiClient(SERVICE_URL));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

store.subscribe(() => render(root, store));

const requestedModel = new URLSearchParams(window.location.search).get("model");
void store.loadModels(requestedModel);
