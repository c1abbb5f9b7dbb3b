import { StudioApi } from "./api.js";
import { StudioApp } from "./app.js";

const root = document.getElementById("studio");
if (root === null) throw new Error("missing #studio root element");
const app = new StudioApp(document, new StudioApi(), root);
void app.start();
