// Browser entry point; kept separate so library modules import clean.

import { bootstrap } from "./main.js";

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", () => bootstrap());
} else {
  bootstrap();
}
