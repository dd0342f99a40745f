import { ReviewApi } from "./api.js";
import { ReviewStore } from "./store.js";
import { ReviewUi } from "./ui.js";

const base = new URLSearchParams(location.search).get("api") ?? "";
const store = new ReviewStore(new ReviewApi(base));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
new ReviewUi(root, store).start();
