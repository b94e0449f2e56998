import vegaEmbed from "vega-embed";
import { initApp } from "./app.js";
import type { EmbedFn } from "./view.js";

// vega-embed is pulled in here, at the bundle entry, so the rest of the
// modules stay renderer-agnostic and unit-testable with a stub.
const embed: EmbedFn = (el, spec) => vegaEmbed(el, spec as never, { actions: false });

initApp(document, embed);
